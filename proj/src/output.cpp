#include "chainqed/output.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace chainqed {

namespace {

std::string fixed(double v, int digits = 2) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, digits);
    return std::string(buf.data(), res.ptr);
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string csv_field(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

// Tick positions at 1, 2 or 5 times a power of ten.
std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 5.0, 10.0}) {
        step = f * mag;
        if (step >= raw) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    }
    return ticks;
}

std::string tick_label(double v) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 4);
    return std::string(buf.data(), res.ptr);
}

const std::array<const char*, 10> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Frame {
    double width{800}, height{500};
    double left{80}, right{30}, top{40}, bottom{60};
    double x0{0}, x1{1}, y0{0}, y1{1};

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void open_svg(std::ostringstream& os, const Frame& f, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(f.width, 0) << "\" height=\""
       << fixed(f.height, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fixed(f.width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << escape_xml(title) << "</text>\n";
}

void draw_axes(std::ostringstream& os, const Frame& f, const std::string& xl, const std::string& yl, bool log_y) {
    os << "<rect x=\"" << fixed(f.left) << "\" y=\"" << fixed(f.top) << "\" width=\""
       << fixed(f.width - f.left - f.right) << "\" height=\"" << fixed(f.height - f.top - f.bottom)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : nice_ticks(f.x0, f.x1)) {
        const double x = f.px(t);
        os << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(f.height - f.bottom) << "\" x2=\"" << fixed(x)
           << "\" y2=\"" << fixed(f.height - f.bottom + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(f.height - f.bottom + 18)
           << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    }
    for (double t : nice_ticks(f.y0, f.y1)) {
        const double y = f.py(t);
        os << "<line x1=\"" << fixed(f.left - 5) << "\" y1=\"" << fixed(y) << "\" x2=\"" << fixed(f.left)
           << "\" y2=\"" << fixed(y) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fixed(f.left - 8) << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">"
           << (log_y ? "1e" : "") << tick_label(t) << "</text>\n";
    }
    os << "<text x=\"" << fixed(f.left + (f.width - f.left - f.right) / 2) << "\" y=\"" << fixed(f.height - 15)
       << "\" text-anchor=\"middle\">" << escape_xml(xl) << "</text>\n";
    os << "<text transform=\"translate(18," << fixed(f.top + (f.height - f.top - f.bottom) / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(yl) << "</text>\n";
}

void widen(double& lo, double& hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        lo = 0.0;
        hi = 1.0;
    } else if (!(hi > lo)) {
        const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
        lo -= pad;
        hi += pad;
    }
}

}  // namespace

void Dataset::add_row(std::vector<Cell> row) {
    if (!columns.empty() && row.size() != columns.size())
        throw std::invalid_argument("dataset row has " + std::to_string(row.size()) + " cells for " +
                                    std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

std::string to_csv(const Dataset& data) {
    if (data.columns.empty()) throw std::invalid_argument("to_csv: dataset has no columns");
    std::string out;
    for (const auto& c : data.comments) out += "# " + c + "\n";
    for (std::size_t i = 0; i < data.columns.size(); ++i) out += (i ? "," : "") + csv_field(data.columns[i]);
    out += "\n";
    for (const auto& row : data.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(row[i]);
        out += "\n";
    }
    return out;
}

std::string render_svg(const LinePlot& plot) {
    Frame f;
    auto transform = [&](double y) { return plot.log_y ? (y > 0.0 ? std::log10(y) : NAN) : y; };
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : plot.series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            const double y = transform(s.y[i]);
            if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    widen(xmin, xmax);
    widen(ymin, ymax);
    const double pad = 0.04 * (ymax - ymin);
    f.x0 = xmin;
    f.x1 = xmax;
    f.y0 = ymin - pad;
    f.y1 = ymax + pad;

    std::ostringstream os;
    open_svg(os, f, plot.title);
    draw_axes(os, f, plot.x_label, plot.y_label, plot.log_y);
    for (double m : plot.markers_x) {
        if (m < f.x0 || m > f.x1) continue;
        os << "<line x1=\"" << fixed(f.px(m)) << "\" y1=\"" << fixed(f.top) << "\" x2=\"" << fixed(f.px(m))
           << "\" y2=\"" << fixed(f.height - f.bottom) << "\" stroke=\"#888\" stroke-dasharray=\"4,3\"/>\n";
    }
    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const auto& s = plot.series[k];
        const char* color = kPalette[k % kPalette.size()];
        std::string points;
        auto flush = [&] {
            if (!points.empty())
                os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\" points=\"" << points
                   << "\"/>\n";
            points.clear();
        };
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            const double y = transform(s.y[i]);
            if (!std::isfinite(s.x[i]) || !std::isfinite(y)) {
                flush();
                continue;
            }
            points += fixed(f.px(s.x[i])) + "," + fixed(f.py(y)) + " ";
        }
        flush();
    }
    if (plot.series.size() <= 12) {
        for (std::size_t k = 0; k < plot.series.size(); ++k) {
            if (plot.series[k].label.empty()) continue;
            const double y = f.top + 14.0 * static_cast<double>(k + 1);
            const double x = f.width - f.right - 110;
            os << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(y - 4) << "\" x2=\"" << fixed(x + 18)
               << "\" y2=\"" << fixed(y - 4) << "\" stroke=\"" << kPalette[k % kPalette.size()]
               << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << fixed(x + 22) << "\" y=\"" << fixed(y) << "\">"
               << escape_xml(plot.series[k].label) << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string render_svg(const Heatmap& map) {
    if (map.values.rows() != static_cast<Eigen::Index>(map.y.size()) ||
        map.values.cols() != static_cast<Eigen::Index>(map.x.size()) || map.x.empty() || map.y.empty())
        throw std::invalid_argument("render_svg: heatmap dimensions do not match its axes");
    Frame f;
    f.right = 90;
    f.x0 = map.x.front();
    f.x1 = map.x.back();
    f.y0 = map.y.front() - 0.5;
    f.y1 = map.y.back() + 0.5;
    widen(f.x0, f.x1);

    const double vmax = std::max(map.values.maxCoeff(), 1e-300);
    // White to dark blue.
    auto color = [&](double v) {
        const double t = std::clamp(v / vmax, 0.0, 1.0);
        const int r = static_cast<int>(255 * (1.0 - 0.9 * t));
        const int g = static_cast<int>(255 * (1.0 - 0.75 * t));
        const int b = static_cast<int>(255 * (1.0 - 0.35 * t));
        std::ostringstream c;
        c << "rgb(" << r << "," << g << "," << b << ")";
        return c.str();
    };

    std::ostringstream os;
    open_svg(os, f, map.title);
    const std::size_t stride = std::max<std::size_t>(1, map.x.size() / 400);
    for (Eigen::Index r = 0; r < map.values.rows(); ++r) {
        const double ytop = f.py(map.y[static_cast<std::size_t>(r)] + 0.5);
        const double ybot = f.py(map.y[static_cast<std::size_t>(r)] - 0.5);
        for (std::size_t c = 0; c < map.x.size(); c += stride) {
            const std::size_t next = std::min(c + stride, map.x.size() - 1);
            const double xa = f.px(map.x[c]);
            const double xb = next > c ? f.px(map.x[next]) : f.px(f.x1);
            os << "<rect x=\"" << fixed(xa) << "\" y=\"" << fixed(ytop) << "\" width=\""
               << fixed(std::max(xb - xa, 0.5)) << "\" height=\"" << fixed(ybot - ytop) << "\" fill=\""
               << color(map.values(r, static_cast<Eigen::Index>(c))) << "\"/>\n";
        }
    }
    draw_axes(os, f, map.x_label, map.y_label, false);
    os << "<text x=\"" << fixed(f.width - 80) << "\" y=\"" << fixed(f.top + 12) << "\">max " << tick_label(vmax)
       << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

void write_file(const std::string& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw IoError("failed writing '" + path + "'");
}

void emit_csv(const Dataset& data, const std::string& path) { write_file(path, to_csv(data)); }

void emit_plot(const LinePlot& plot, const std::string& path) { write_file(path, render_svg(plot)); }

}  // namespace chainqed

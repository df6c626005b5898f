// output.hpp — CSV datasets, SVG plots and content digests.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace chainqed {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Cell = std::variant<double, std::int64_t, std::string>;

struct Dataset {
    std::vector<std::string> comments;  // written as "# ..." lines before the header
    std::vector<std::string> columns;   // "name (unit)"
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
};

// 17 significant digits: every double round-trips through the text.
std::string format_double(double v);
std::string to_csv(const Dataset& data);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<double> markers_x;  // vertical guide lines
    bool log_y{false};
};

struct Heatmap {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;   // one per column of values
    std::vector<double> y;   // one per row of values
    Eigen::MatrixXd values;  // rows follow y, columns follow x
};

std::string render_svg(const LinePlot& plot);
std::string render_svg(const Heatmap& map);

std::string sha256_hex(const std::string& bytes);

// Writes bytes to path, creating parent directories. Throws IoError.
void write_file(const std::string& path, const std::string& bytes);

void emit_csv(const Dataset& data, const std::string& path);
void emit_plot(const LinePlot& plot, const std::string& path);

}  // namespace chainqed

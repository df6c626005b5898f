#include "chainqed/spectral.hpp"

#include "chainqed/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace chainqed {

namespace {

constexpr double kMinOverlap = 0.70710678118654752;  // 1/sqrt(2)

std::string describe(SweepKind kind, double value) {
    return std::string(kind == SweepKind::CouplingM ? "M = " : "k0R = ") + std::to_string(value);
}

bool lexicographic_less(const std::complex<double>& a, const std::complex<double>& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

struct Match {
    std::vector<Eigen::Index> target;  // curve i continues as eigenpair target[i]
    bool resolved{true};
};

bool has_near_duplicate(const Eigen::VectorXcd& values, Eigen::Index i, double tol) {
    for (Eigen::Index j = 0; j < values.size(); ++j) {
        if (j != i && std::abs(values(i) - values(j)) <= tol) return true;
    }
    return false;
}

// Greedy maximal-overlap assignment between consecutive eigenbases. Low
// overlap is tolerated inside a degenerate cluster, where the eigenbasis is
// not unique and no step refinement can restore it.
Match match_curves(const Eigensystem& from, const Eigensystem& to, double degeneracy_tol) {
    const Eigen::Index n = from.values.size();
    const Eigen::MatrixXd overlap = (from.vectors.adjoint() * to.vectors).cwiseAbs();

    std::vector<std::pair<Eigen::Index, Eigen::Index>> candidates;
    candidates.reserve(static_cast<std::size_t>(n * n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) candidates.emplace_back(i, j);
    std::stable_sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
        return overlap(a.first, a.second) > overlap(b.first, b.second);
    });

    Match m;
    m.target.assign(static_cast<std::size_t>(n), -1);
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (const auto& [i, j] : candidates) {
        if (m.target[static_cast<std::size_t>(i)] >= 0 || taken[static_cast<std::size_t>(j)]) continue;
        m.target[static_cast<std::size_t>(i)] = j;
        taken[static_cast<std::size_t>(j)] = true;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = m.target[static_cast<std::size_t>(i)];
        if (overlap(i, j) >= kMinOverlap) continue;
        if (has_near_duplicate(from.values, i, degeneracy_tol) || has_near_duplicate(to.values, j, degeneracy_tol))
            continue;
        m.resolved = false;
    }
    return m;
}

Eigensystem permuted(const Eigensystem& es, const std::vector<Eigen::Index>& target) {
    Eigensystem out;
    out.values.resize(es.values.size());
    out.vectors.resize(es.vectors.rows(), es.vectors.cols());
    for (std::size_t i = 0; i < target.size(); ++i) {
        out.values(static_cast<Eigen::Index>(i)) = es.values(target[i]);
        out.vectors.col(static_cast<Eigen::Index>(i)) = es.vectors.col(target[i]);
    }
    return out;
}

double spread(const Eigen::VectorXcd& v) {
    double lo_re = std::numeric_limits<double>::infinity(), hi_re = -lo_re;
    double lo_im = lo_re, hi_im = -lo_re;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        lo_re = std::min(lo_re, v(i).real());
        hi_re = std::max(hi_re, v(i).real());
        lo_im = std::min(lo_im, v(i).imag());
        hi_im = std::max(hi_im, v(i).imag());
    }
    return std::hypot(hi_re - lo_re, hi_im - lo_im);
}

class Tracker {
public:
    Tracker(const SweepContext& ctx, SweepKind kind, double degeneracy_tol, std::size_t max_depth)
        : ctx_(ctx), kind_(kind), tol_(degeneracy_tol), max_depth_(max_depth) {}

    void start(double x, const Eigensystem& es) {
        grid.push_back(x);
        systems.push_back(es);
    }

    // Appends `to` (evaluated at x) after the last tracked point, bisecting
    // the step while the eigenbasis rotates too fast to pair reliably.
    void advance(double x, const Eigensystem& to, std::size_t depth = 0) {
        const Match m = match_curves(systems.back(), to, tol_);
        if (!m.resolved) {
            if (depth >= max_depth_) {
                throw NumericalError("eigen_sweep: curve pairing failed near " + describe(kind_, x) +
                                     " even after step refinement");
            }
            const double mid = 0.5 * (grid.back() + x);
            advance(mid, eigensystem(ctx_.hamiltonian_at(kind_, mid)), depth + 1);
            advance(x, to, depth + 1);
            return;
        }
        grid.push_back(x);
        systems.push_back(permuted(to, m.target));
    }

    std::vector<double> grid;
    std::vector<Eigensystem> systems;

private:
    const SweepContext& ctx_;
    SweepKind kind_;
    double tol_;
    std::size_t max_depth_;
};

}  // namespace

void SweepAxis::validate() const {
    if (grid.size() < 2) throw std::invalid_argument("sweep axis: grid needs at least 2 points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw std::invalid_argument("sweep axis: non-finite grid value");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw std::invalid_argument("sweep axis: grid must be strictly increasing");
    }
    if (kind == SweepKind::SpacingK0R && !(grid.front() > 0.0))
        throw std::invalid_argument("sweep axis: k0R values must be positive");
}

double SweepAxis::step() const {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < grid.size(); ++i) h = std::min(h, grid[i] - grid[i - 1]);
    return h;
}

SweepAxis SweepAxis::linspace(SweepKind kind, double lo, double hi, std::size_t points) {
    if (points < 2 || !(hi > lo)) throw std::invalid_argument("sweep axis: need hi > lo and >= 2 points");
    SweepAxis axis;
    axis.kind = kind;
    axis.grid.resize(points);
    const double h = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) axis.grid[i] = lo + h * static_cast<double>(i);
    axis.grid.back() = hi;
    return axis;
}

EffectiveHamiltonian SweepContext::hamiltonian_at(SweepKind kind, double value) const {
    if (kind == SweepKind::CouplingM) {
        const SelfEnergy se = build_self_energy(chain, orientation, NearestNeighbor{value, bond_scale}, params);
        return build_hamiltonian(se, params);
    }
    const SelfEnergy se = build_self_energy(chain.scaled_to_spacing(value), orientation, LongRange{}, params);
    return build_hamiltonian(se, params);
}

Eigensystem eigensystem(const EffectiveHamiltonian& h) {
    Eigensystem es;
    if (h.is_hermitian(1e-12)) {
        if (h.matrix.imag().cwiseAbs().maxCoeff() == 0.0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix.real());
            if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed (real symmetric)");
            es.values = solver.eigenvalues().cast<std::complex<double>>();
            es.vectors = solver.eigenvectors().cast<std::complex<double>>();
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix);
            if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed (Hermitian)");
            es.values = solver.eigenvalues().cast<std::complex<double>>();
            es.vectors = solver.eigenvectors();
        }
        return es;
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h.matrix);
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed (non-Hermitian)");
    const Eigen::Index n = h.matrix.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return lexicographic_less(solver.eigenvalues()(a), solver.eigenvalues()(b));
    });
    es.values.resize(n);
    es.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        es.values(i) = solver.eigenvalues()(order[static_cast<std::size_t>(i)]);
        es.vectors.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]).normalized();
    }
    return es;
}

double SpectrumSweep::spectral_range() const {
    double lo_re = std::numeric_limits<double>::infinity(), hi_re = -lo_re;
    double lo_im = lo_re, hi_im = -lo_re;
    for (const auto& v : eigenvalues) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            lo_re = std::min(lo_re, v(i).real());
            hi_re = std::max(hi_re, v(i).real());
            lo_im = std::min(lo_im, v(i).imag());
            hi_im = std::max(hi_im, v(i).imag());
        }
    }
    const double r = std::hypot(hi_re - lo_re, hi_im - lo_im);
    return r > 0.0 && std::isfinite(r) ? r : 1.0;
}

SpectrumSweep eigen_sweep(const SweepContext& context, const SweepAxis& axis, const SweepOptions& options) {
    axis.validate();
    const std::size_t n = axis.grid.size();

    std::vector<Eigensystem> raw(n);
    parallel_for(n, options.threads, [&](std::size_t i) {
        try {
            raw[i] = eigensystem(context.hamiltonian_at(axis.kind, axis.grid[i]));
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at " + describe(axis.kind, axis.grid[i]));
        }
    });

    double range = 0.0;
    for (const auto& es : raw) range = std::max(range, spread(es.values));
    if (!(range > 0.0)) range = 1.0;

    Tracker tracker(context, axis.kind, 1e-6 * range, options.max_refinement_depth);
    tracker.start(axis.grid.front(), raw.front());
    for (std::size_t i = 1; i < n; ++i) tracker.advance(axis.grid[i], raw[i]);

    SpectrumSweep sweep;
    sweep.axis.kind = axis.kind;
    sweep.axis.grid = std::move(tracker.grid);
    sweep.context = context;
    sweep.eigenvalues.reserve(tracker.systems.size());
    sweep.eigenvectors.reserve(tracker.systems.size());
    for (auto& es : tracker.systems) {
        sweep.eigenvalues.push_back(std::move(es.values));
        sweep.eigenvectors.push_back(std::move(es.vectors));
    }
    sweep.hermitian = context.params.dissipation == DissipationMode::None;
    return sweep;
}

std::size_t CrossingReport::count(CrossingKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [kind](const CrossingEvent& e) { return e.kind == kind; }));
}

namespace {

struct GapProbe {
    double gap;
    std::complex<double> energy;
};

// Gap between the two eigenpairs at x that best continue span{va, vb}.
GapProbe probe_gap(const SpectrumSweep& sweep, double x, const Eigen::MatrixXcd& span) {
    const Eigensystem es = eigensystem(sweep.context.hamiltonian_at(sweep.axis.kind, x));
    const Eigen::VectorXd weight = (span.adjoint() * es.vectors).cwiseAbs2().colwise().sum().transpose();
    Eigen::Index first = 0;
    weight.maxCoeff(&first);
    Eigen::Index second = first == 0 ? 1 : 0;
    for (Eigen::Index k = 0; k < weight.size(); ++k) {
        if (k != first && weight(k) > weight(second)) second = k;
    }
    return {std::abs(es.values(first) - es.values(second)), 0.5 * (es.values(first) + es.values(second))};
}

Eigen::Index nearest_curve(const Eigen::VectorXcd& values, Eigen::Index c) {
    Eigen::Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        if (k == c) continue;
        const double d = std::abs(values(k) - values(c));
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

}  // namespace

CrossingReport detect_crossings(const SpectrumSweep& sweep, const CrossingTolerances& tolerances) {
    if (sweep.n_points() < 3) throw std::invalid_argument("detect_crossings: sweep needs at least 3 points");
    const auto& grid = sweep.axis.grid;
    const double span = grid.back() - grid.front();

    CrossingReport report;
    report.tau_cross = tolerances.tau_cross.value_or(1e-6 * sweep.spectral_range());
    report.tau_refine = tolerances.tau_refine.value_or(1e-10 * span);
    if (!(report.tau_cross > 0.0) || !(report.tau_refine > 0.0))
        throw std::invalid_argument("detect_crossings: tolerances must be positive");

    const std::size_t np = sweep.n_points();
    const auto nc = static_cast<Eigen::Index>(sweep.n_curves());
    std::vector<double> gap(np);

    for (Eigen::Index a = 0; a < nc; ++a) {
        for (Eigen::Index b = a + 1; b < nc; ++b) {
            for (std::size_t p = 0; p < np; ++p) gap[p] = std::abs(sweep.eigenvalues[p](a) - sweep.eigenvalues[p](b));
            for (std::size_t p = 1; p + 1 < np; ++p) {
                if (!(gap[p - 1] > gap[p] && gap[p] <= gap[p + 1])) continue;
                const auto& values = sweep.eigenvalues[p];
                if (nearest_curve(values, a) != b || nearest_curve(values, b) != a) continue;

                Eigen::MatrixXcd pair(values.size(), 2);
                pair.col(0) = sweep.eigenvectors[p].col(a);
                pair.col(1) = sweep.eigenvectors[p].col(b);
                const Eigen::MatrixXcd span_ab = Eigen::HouseholderQR<Eigen::MatrixXcd>(pair).householderQ() *
                                                 Eigen::MatrixXcd::Identity(values.size(), 2);

                // Golden-section search on the bracketing grid interval.
                const double invphi = 0.61803398874989485;
                double lo = grid[p - 1], hi = grid[p + 1];
                double best_x = grid[p];
                GapProbe best{gap[p], 0.5 * (values(a) + values(b))};
                double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
                GapProbe g1 = probe_gap(sweep, x1, span_ab), g2 = probe_gap(sweep, x2, span_ab);
                while (hi - lo > report.tau_refine) {
                    if (g1.gap < g2.gap) {
                        hi = x2;
                        x2 = x1;
                        g2 = g1;
                        x1 = hi - invphi * (hi - lo);
                        g1 = probe_gap(sweep, x1, span_ab);
                    } else {
                        lo = x1;
                        x1 = x2;
                        g1 = g2;
                        x2 = lo + invphi * (hi - lo);
                        g2 = probe_gap(sweep, x2, span_ab);
                    }
                    if (g1.gap < best.gap) best = g1, best_x = x1;
                    if (g2.gap < best.gap) best = g2, best_x = x2;
                }

                CrossingEvent ev;
                ev.parameter = best_x;
                ev.curves = {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
                ev.min_gap = best.gap;
                ev.kind = best.gap < report.tau_cross ? CrossingKind::Crossing : CrossingKind::AvoidedCrossing;
                ev.energy = best.energy;
                report.events.push_back(ev);
            }
        }
    }

    std::stable_sort(report.events.begin(), report.events.end(), [](const CrossingEvent& x, const CrossingEvent& y) {
        if (x.parameter != y.parameter) return x.parameter < y.parameter;
        return x.curves < y.curves;
    });
    const double same = std::max(10.0 * report.tau_refine, 1e-12 * span);
    std::vector<CrossingEvent> unique;
    for (const auto& e : report.events) {
        const bool dup = std::any_of(unique.begin(), unique.end(), [&](const CrossingEvent& u) {
            return u.curves == e.curves && std::abs(u.parameter - e.parameter) <= same;
        });
        if (!dup) unique.push_back(e);
    }
    report.events = std::move(unique);
    return report;
}

}  // namespace chainqed

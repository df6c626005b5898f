#include "chainqed/common.hpp"
#include "chainqed/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace chainqed {

namespace {

constexpr std::size_t kContourPoints = 64;
constexpr double kMaxCondition = 1e8;

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

}  // namespace

std::size_t PoleSet::total_order() const {
    std::size_t total = 0;
    for (const auto& p : poles) total += p.order;
    return total;
}

std::size_t PoleSet::max_order() const {
    std::size_t m = 0;
    for (const auto& p : poles) m = std::max(m, p.order);
    return m;
}

PoleSet characteristic_poles(const EffectiveHamiltonian& h, std::optional<double> tau_degeneracy) {
    const Eigensystem es = eigensystem(h);
    const auto n = static_cast<std::size_t>(es.values.size());

    double range = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            range = std::max(range, std::abs(es.values(static_cast<Eigen::Index>(i)) -
                                             es.values(static_cast<Eigen::Index>(j))));
    PoleSet set;
    set.tau_degeneracy = tau_degeneracy.value_or(1e-8 * (range > 0.0 ? range : 1.0));
    if (!(set.tau_degeneracy >= 0.0)) throw std::invalid_argument("characteristic_poles: tau must be >= 0");

    // Single-linkage clustering: chains of near-equal eigenvalues form one pole.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(es.values(static_cast<Eigen::Index>(i)) - es.values(static_cast<Eigen::Index>(j))) <=
                set.tau_degeneracy) {
                parent[find_root(parent, j)] = find_root(parent, i);
            }
        }
    }

    std::vector<std::vector<std::complex<double>>> clusters;
    std::vector<std::size_t> cluster_of(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find_root(parent, i);
        if (cluster_of[r] == n) {
            cluster_of[r] = clusters.size();
            clusters.emplace_back();
        }
        clusters[cluster_of[r]].push_back(es.values(static_cast<Eigen::Index>(i)));
    }

    const std::complex<double> minus_i(0.0, -1.0);
    for (const auto& c : clusters) {
        std::complex<double> mean{};
        for (const auto& v : c) mean += v;
        mean /= static_cast<double>(c.size());
        double radius = 0.0;
        for (const auto& v : c) radius = std::max(radius, std::abs(v - mean));
        set.poles.push_back({minus_i * mean, c.size(), radius});
    }
    // Ascending in energy epsilon = i * lambda.
    std::stable_sort(set.poles.begin(), set.poles.end(), [](const Pole& a, const Pole& b) {
        const std::complex<double> ea = std::complex<double>(0.0, 1.0) * a.location;
        const std::complex<double> eb = std::complex<double>(0.0, 1.0) * b.location;
        if (ea.real() != eb.real()) return ea.real() < eb.real();
        return ea.imag() < eb.imag();
    });
    return set;
}

// The Laurent coefficients at a pole of order k come from the Taylor
// coefficients of F(s) = (s - lambda)^k alpha_hat(s). They are extracted with a
// trapezoidal contour integral on a circle around lambda, which converges
// geometrically as long as the circle separates the cluster from every other
// pole. This replaces finite differences, whose error does not improve past
// the first few orders.
PartialFractionExpansion residue_expansion(const EffectiveHamiltonian& h, const Eigen::VectorXcd& alpha0,
                                           const PoleSet& poles) {
    const auto n_atoms = static_cast<Eigen::Index>(h.n_atoms);
    const auto dim = static_cast<Eigen::Index>(h.dim());
    if (alpha0.size() != n_atoms)
        throw std::invalid_argument("residue_expansion: alpha0 has " + std::to_string(alpha0.size()) +
                                    " entries for " + std::to_string(n_atoms) + " atoms");
    if (std::abs(alpha0.squaredNorm() - 1.0) > 1e-10)
        throw std::invalid_argument("residue_expansion: alpha0 must be normalized");
    if (poles.total_order() != h.dim())
        throw std::invalid_argument("residue_expansion: pole orders do not sum to N+1");

    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(dim);
    psi0.head(n_atoms) = alpha0;
    const std::complex<double> i_unit(0.0, 1.0);
    const Eigen::MatrixXcd i_h = i_unit * h.matrix;
    const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(dim, dim);

    PartialFractionExpansion out;
    out.alpha0 = alpha0;
    out.condition = 1.0;

    for (std::size_t q = 0; q < poles.poles.size(); ++q) {
        const Pole& pole = poles.poles[q];
        const std::size_t k = pole.order;

        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < poles.poles.size(); ++r) {
            if (r == q) continue;
            gap = std::min(gap, std::abs(poles.poles[r].location - pole.location) - poles.poles[r].cluster_radius);
        }
        const double rho = std::isfinite(gap) ? 0.5 * gap : std::max(1.0, 10.0 * pole.cluster_radius);
        if (!(rho > 0.0) || rho < 10.0 * pole.cluster_radius) {
            throw NumericalError("residue_expansion: pole at " + std::to_string(pole.location.imag()) +
                                 " is not separated from its neighbours (gap " + std::to_string(gap) +
                                 ", cluster radius " + std::to_string(pole.cluster_radius) +
                                 "); adjust tau_degeneracy");
        }

        std::vector<Eigen::VectorXcd> coeff(k, Eigen::VectorXcd::Zero(n_atoms));
        double max_f = 0.0;
        for (std::size_t p = 0; p < kContourPoints; ++p) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(p) / kContourPoints;
            const std::complex<double> z = std::polar(rho, theta);
            const Eigen::VectorXcd psi_hat = ((pole.location + z) * identity + i_h).partialPivLu().solve(psi0);
            const Eigen::VectorXcd f = std::pow(z, static_cast<int>(k)) * psi_hat.head(n_atoms);
            max_f = std::max(max_f, f.cwiseAbs().maxCoeff());
            std::complex<double> zm(1.0, 0.0);
            for (std::size_t m = 0; m < k; ++m) {
                coeff[m] += f / zm;
                zm *= z;
            }
        }

        for (std::size_t m = 0; m < k; ++m) {
            coeff[m] /= static_cast<double>(kContourPoints);
            const double cond = max_f / std::pow(rho, static_cast<double>(m));
            out.condition = std::max(out.condition, cond);
            if (!(cond <= kMaxCondition) || !coeff[m].allFinite()) {
                throw NumericalError("residue_expansion: ill-conditioned derivative of order " + std::to_string(m) +
                                     " at pole " + std::to_string(pole.location.imag()) +
                                     " (condition estimate " + std::to_string(cond) + ")");
            }
            if (coeff[m].cwiseAbs().maxCoeff() < 1e-14) continue;
            out.terms.push_back({pole.location, k - m, coeff[m]});
        }
    }
    return out;
}

std::array<double, 3> two_atom_eigenvalues(double omega1, double omega2, double omega, double m, double kappa_a,
                                           double kappa_b) {
    for (double v : {omega1, omega2, omega, m, kappa_a, kappa_b}) {
        if (!std::isfinite(v)) throw std::invalid_argument("two_atom_eigenvalues: parameters must be finite");
    }
    // lambda^3 - A lambda^2 + B lambda - C for the 3x3 block
    // [[w1, M, ka], [M, w2, kb], [ka, kb, w]].
    const double a = omega1 + omega2 + omega;
    const double b = omega1 * omega2 + omega1 * omega + omega2 * omega - m * m - kappa_a * kappa_a - kappa_b * kappa_b;
    const double c = omega1 * omega2 * omega + 2.0 * m * kappa_a * kappa_b - omega1 * kappa_b * kappa_b -
                     omega2 * kappa_a * kappa_a - omega * m * m;

    // Depressed cubic t^3 + p t + q with lambda = t + A/3.
    const double shift = a / 3.0;
    const double p = b - a * a / 3.0;
    const double q = -2.0 * a * a * a / 27.0 + a * b / 3.0 - c;

    std::array<double, 3> roots{};
    if (p > -1e-300) {
        // Triple root (p = 0 forces q = 0 for a real symmetric matrix).
        roots.fill(shift + std::cbrt(-q));
    } else {
        const double r = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) roots[static_cast<std::size_t>(k)] =
            shift + r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0);
    }

    // Newton polish on the undepressed polynomial.
    for (double& x : roots) {
        for (int it = 0; it < 3; ++it) {
            const double f = ((x - a) * x + b) * x - c;
            const double df = (3.0 * x - 2.0 * a) * x + b;
            if (df == 0.0 || !std::isfinite(f / df)) break;
            const double nx = x - f / df;
            if (std::abs(nx - x) > 1e-6 * (1.0 + std::abs(x))) break;  // near a double root; keep the trig value
            x = nx;
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

}  // namespace chainqed

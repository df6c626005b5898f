#include "chainqed/model.hpp"

#include "chainqed/common.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace chainqed {

namespace {

void require_positive_argument(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument(std::string(what) + ": separation must be positive and finite, got " +
                                    std::to_string(x));
    }
}

// sin x / x^3 - cos x / x^2, which tends to 1/3 and cancels badly for small x.
double radial_difference(double x) {
    if (x < 0.1) {
        const double x2 = x * x;
        return 1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0 - x2 * x2 * x2 / 45360.0;
    }
    return std::sin(x) / (x * x * x) - std::cos(x) / (x * x);
}

double sinc(double x) {
    return x < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
}

}  // namespace

void ChainGeometrySpec::validate() const {
    if (n_atoms < 1) throw std::invalid_argument("chain geometry: n_atoms must be >= 1");
    if (!(nominal_spacing > 0.0) || !std::isfinite(nominal_spacing))
        throw std::invalid_argument("chain geometry: nominal_spacing must be > 0");
    if (!(disorder_sigma >= 0.0) || !std::isfinite(disorder_sigma))
        throw std::invalid_argument("chain geometry: disorder_sigma must be >= 0");
    if (!(min_separation > 0.0) || !(min_separation < nominal_spacing))
        throw std::invalid_argument("chain geometry: min_separation must lie in (0, nominal_spacing)");
    if (max_attempts < 1) throw std::invalid_argument("chain geometry: max_attempts must be >= 1");
}

double ChainRealization::separation(std::size_t i, std::size_t j) const {
    return std::abs(positions.at(i) - positions.at(j));
}

ChainRealization ChainRealization::scaled_to_spacing(double new_spacing) const {
    require_positive_argument(new_spacing, "scaled_to_spacing");
    const double factor = new_spacing / spec.nominal_spacing;
    ChainRealization out = *this;
    for (double& x : out.positions) x *= factor;
    out.spec.nominal_spacing = new_spacing;
    out.spec.min_separation *= factor;
    return out;
}

ChainRealization ChainRealization::ordered(std::size_t n, double spacing) {
    ChainGeometrySpec spec;
    spec.n_atoms = n;
    spec.nominal_spacing = spacing;
    spec.min_separation = std::min(spec.min_separation, 0.5 * spacing);
    return sample_chain(spec, 0);
}

void DipoleOrientation::validate() const {
    if (!(theta >= 0.0 && theta <= std::numbers::pi / 2 + 1e-15))
        throw std::invalid_argument("dipole orientation: theta must lie in [0, pi/2]");
}

void SystemParams::validate() const {
    if (kappa.empty()) throw std::invalid_argument("system params: kappa must have one entry per atom");
    if (gamma != 1.0) throw std::invalid_argument("system params: gamma is the unit and must equal 1");
    if (!std::isfinite(omega) || !std::isfinite(omega0))
        throw std::invalid_argument("system params: frequencies must be finite");
    for (double k : kappa) {
        if (!std::isfinite(k)) throw std::invalid_argument("system params: kappa must be finite");
    }
}

SystemParams SystemParams::uniform(std::size_t n, double detuning, double coupling, DissipationMode mode) {
    SystemParams p;
    p.omega0 = 0.0;
    p.omega = detuning;
    p.kappa.assign(n, coupling);
    p.dissipation = mode;
    return p;
}

SystemParams perturb_couplings(SystemParams params, double sigma_kappa, std::uint64_t seed) {
    if (!(sigma_kappa >= 0.0)) throw std::invalid_argument("perturb_couplings: sigma must be >= 0");
    if (sigma_kappa == 0.0) return params;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma_kappa);
    for (double& k : params.kappa) k *= 1.0 + noise(rng);
    return params;
}

std::vector<double> sample_bond_noise(std::size_t n_bonds, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("sample_bond_noise: sigma must be >= 0");
    std::vector<double> scale(n_bonds, 1.0);
    if (sigma == 0.0) return scale;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& s : scale) s += noise(rng);
    return scale;
}

bool EffectiveHamiltonian::is_hermitian(double tol) const {
    return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

ChainRealization sample_chain(const ChainGeometrySpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t n = spec.n_atoms;
    const double d = spec.nominal_spacing;

    ChainRealization out;
    out.seed = seed;
    out.spec = spec;
    out.positions.resize(n);
    for (std::size_t j = 0; j < n; ++j) out.positions[j] = static_cast<double>(j + 1) * d;
    if (spec.disorder_sigma == 0.0) return out;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spec.disorder_sigma);
    for (std::size_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
        for (std::size_t j = 0; j < n; ++j) {
            const double site = static_cast<double>(j + 1);
            const double xi = noise(rng);
            out.positions[j] = spec.reference == DisorderReference::Spacing ? d * (site + xi)
                                                                            : site * d * (1.0 + xi);
        }
        std::sort(out.positions.begin(), out.positions.end());
        bool ok = true;
        for (std::size_t j = 1; j < n && ok; ++j) {
            ok = out.positions[j] - out.positions[j - 1] >= spec.min_separation;
        }
        if (ok) return out;
        ++out.rejections;
    }
    throw NumericalError("sample_chain: no realization with all separations >= " +
                         std::to_string(spec.min_separation) + " after " + std::to_string(spec.max_attempts) +
                         " attempts; disorder_sigma is too large for this geometry");
}

double rddi_coupling(double x, DipoleOrientation orientation) {
    require_positive_argument(x, "rddi_coupling");
    orientation.validate();
    const double c2 = std::cos(orientation.theta) * std::cos(orientation.theta);
    const double cx = std::cos(x);
    const double sx = std::sin(x);
    return 0.75 * ((1.0 - 3.0 * c2) * (cx / (x * x * x) + sx / (x * x)) - (1.0 - c2) * cx / x);
}

double dissipation_rate(double x, DipoleOrientation orientation) {
    require_positive_argument(x, "dissipation_rate");
    orientation.validate();
    const double c2 = std::cos(orientation.theta) * std::cos(orientation.theta);
    return 1.5 * ((1.0 - c2) * sinc(x) - (1.0 - 3.0 * c2) * radial_difference(x));
}

SelfEnergy build_self_energy(const ChainRealization& chain, DipoleOrientation orientation,
                             const InteractionMode& interaction, const SystemParams& params) {
    params.validate();
    const std::size_t n = chain.size();
    if (n == 0) throw std::invalid_argument("build_self_energy: empty chain");
    if (params.n_atoms() != n) {
        throw std::invalid_argument("build_self_energy: kappa has " + std::to_string(params.n_atoms()) +
                                    " entries for a chain of " + std::to_string(n));
    }
    const auto ni = static_cast<Eigen::Index>(n);
    const double floor = chain.spec.min_separation * (1.0 - 1e-12);

    auto checked_separation = [&](std::size_t i, std::size_t j) {
        const double r = chain.separation(i, j);
        if (!(r >= floor)) {
            throw NumericalError("build_self_energy: atoms " + std::to_string(i + 1) + " and " +
                                 std::to_string(j + 1) + " are closer (k0R = " + std::to_string(r) +
                                 ") than the floor " + std::to_string(chain.spec.min_separation));
        }
        return r;
    };

    SelfEnergy se;
    se.mode = params.dissipation;
    se.coherent = Eigen::MatrixXd::Zero(ni, ni);
    se.dissipative = Eigen::MatrixXd::Identity(ni, ni) * params.gamma;

    if (const auto* nn = std::get_if<NearestNeighbor>(&interaction)) {
        if (nn->bond_scale && nn->bond_scale->size() + 1 != n) {
            throw std::invalid_argument("build_self_energy: bond_scale must have n_atoms - 1 entries");
        }
        for (std::size_t b = 0; b + 1 < n; ++b) {
            double scale;
            if (nn->bond_scale) {
                scale = (*nn->bond_scale)[b];
            } else {
                const double ratio = chain.spec.nominal_spacing / checked_separation(b, b + 1);
                scale = ratio * ratio * ratio;
            }
            const double m = nn->coupling * scale;
            const auto i = static_cast<Eigen::Index>(b);
            se.coherent(i, i + 1) = m;
            se.coherent(i + 1, i) = m;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double m = params.gamma * rddi_coupling(checked_separation(i, j), orientation);
                se.coherent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m;
                se.coherent(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = m;
            }
        }
    }

    if (params.dissipation == DissipationMode::Collective) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double g = params.gamma * dissipation_rate(checked_separation(i, j), orientation);
                se.dissipative(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g;
                se.dissipative(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = g;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(se.dissipative, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-10) {
            throw NumericalError("build_self_energy: collective decay matrix is not positive semidefinite");
        }
    }

    if (!se.coherent.allFinite() || !se.dissipative.allFinite()) {
        throw NumericalError("build_self_energy: non-finite kernel value");
    }
    return se;
}

EffectiveHamiltonian build_hamiltonian(const SelfEnergy& self_energy, const SystemParams& params) {
    params.validate();
    const std::size_t n = self_energy.n_atoms();
    if (params.n_atoms() != n || static_cast<std::size_t>(self_energy.dissipative.rows()) != n) {
        throw std::invalid_argument("build_hamiltonian: self-energy is " + std::to_string(n) + "x" +
                                    std::to_string(n) + " but kappa has " + std::to_string(params.n_atoms()) +
                                    " entries");
    }
    const auto ni = static_cast<Eigen::Index>(n);
    const bool lossy = params.dissipation == DissipationMode::Collective;
    const std::complex<double> half_i(0.0, 0.5);

    EffectiveHamiltonian h;
    h.n_atoms = n;
    h.matrix = Eigen::MatrixXcd::Zero(ni + 1, ni + 1);
    for (Eigen::Index i = 0; i < ni; ++i) {
        for (Eigen::Index j = 0; j < ni; ++j) {
            std::complex<double> v = i == j ? std::complex<double>(params.omega0) : self_energy.coherent(i, j);
            if (lossy) v -= half_i * self_energy.dissipative(i, j);
            h.matrix(i, j) = v;
        }
        const double k = params.kappa[static_cast<std::size_t>(i)];
        h.matrix(i, ni) = k;
        h.matrix(ni, i) = k;
    }
    h.matrix(ni, ni) = params.omega;
    return h;
}

}  // namespace chainqed

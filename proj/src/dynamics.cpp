#include "chainqed/dynamics.hpp"

#include "chainqed/common.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chainqed {

namespace {

using OdeState = std::vector<std::complex<double>>;
namespace odeint = boost::numeric::odeint;

constexpr std::complex<double> kI{0.0, 1.0};

// Eigen-expansion psi(t) = V * (c .* exp(lambda * (t - t0))), lambda = -i*epsilon.
struct Modes {
    Eigen::VectorXcd lambda;
    Eigen::MatrixXcd vectors;
    Eigen::VectorXcd coeff;
    double condition{1.0};
    bool hermitian{true};
};

Modes decompose(const EffectiveHamiltonian& h, const Eigen::VectorXcd& psi0) {
    const Eigensystem es = eigensystem(h);
    Modes m;
    m.lambda = -kI * es.values;
    m.vectors = es.vectors;
    m.hermitian = h.is_hermitian(1e-12);
    if (m.hermitian) {
        m.coeff = es.vectors.adjoint() * psi0;
        return m;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.vectors);
    const auto& sv = svd.singularValues();
    m.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    m.coeff = es.vectors.fullPivLu().solve(psi0);
    return m;
}

void check_initial(const EffectiveHamiltonian& h, const AmplitudeState& initial) {
    if (static_cast<std::size_t>(initial.alpha.size()) != h.n_atoms)
        throw std::invalid_argument("initial state has " + std::to_string(initial.alpha.size()) +
                                    " atomic amplitudes for " + std::to_string(h.n_atoms) + " atoms");
    if (std::abs(initial.norm_squared() - 1.0) > 1e-10)
        throw std::invalid_argument("initial state must be normalized");
}

OdeState to_ode(const Eigen::VectorXcd& v) { return OdeState(v.data(), v.data() + v.size()); }

Eigen::VectorXcd from_ode(const OdeState& s, Eigen::Index n) {
    return Eigen::Map<const Eigen::VectorXcd>(s.data(), n);
}

// (exp(w) - 1) / w without cancellation for small |w|.
std::complex<double> exp_average(std::complex<double> w) {
    if (std::abs(w) < 1e-6) return w.real() == 0.0 ? std::complex<double>(1.0) : 1.0 + 0.5 * w;
    const double a = w.real();
    const double b = w.imag();
    const double half = std::sin(0.5 * b);
    const std::complex<double> em1(std::expm1(a) * std::cos(b) - 2.0 * half * half, std::exp(a) * std::sin(b));
    return em1 / w;
}

}  // namespace

Eigen::VectorXcd AmplitudeState::stacked() const {
    Eigen::VectorXcd psi(alpha.size() + 1);
    psi.head(alpha.size()) = alpha;
    psi(alpha.size()) = beta;
    return psi;
}

AmplitudeState AmplitudeState::site_excitation(std::size_t n_atoms, std::size_t site, double time) {
    if (site >= n_atoms) throw std::invalid_argument("site_excitation: site index out of range");
    AmplitudeState s;
    s.alpha = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_atoms));
    s.alpha(static_cast<Eigen::Index>(site)) = 1.0;
    s.time = time;
    return s;
}

AmplitudeState AmplitudeState::from_stacked(const Eigen::VectorXcd& psi, double time) {
    AmplitudeState s;
    s.alpha = psi.head(psi.size() - 1);
    s.beta = psi(psi.size() - 1);
    s.time = time;
    return s;
}

Eigen::MatrixXd Trajectory::populations() const {
    if (states.empty()) return {};
    const Eigen::Index n = states.front().alpha.size();
    Eigen::MatrixXd p(static_cast<Eigen::Index>(states.size()), n + 1);
    for (std::size_t t = 0; t < states.size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        p.row(row).head(n) = states[t].alpha.cwiseAbs2().transpose();
        p(row, n) = std::norm(states[t].beta);
    }
    return p;
}

Trajectory evolve(const EffectiveHamiltonian& h, const AmplitudeState& initial, const std::vector<double>& times,
                  const EvolveOptions& options) {
    check_initial(h, initial);
    if (times.empty()) throw std::invalid_argument("evolve: empty time grid");
    if (times.front() != initial.time) throw std::invalid_argument("evolve: times[0] must equal initial.time");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] >= times[i - 1])) throw std::invalid_argument("evolve: times must be non-decreasing");
    }

    const Eigen::VectorXcd psi0 = initial.stacked();
    const Modes modes = decompose(h, psi0);

    Trajectory traj;
    traj.times = times;
    traj.states.reserve(times.size());
    traj.states.push_back(initial);

    if (modes.hermitian || modes.condition <= options.condition_threshold) {
        traj.propagator = Propagator::Spectral;
        for (std::size_t i = 1; i < times.size(); ++i) {
            const double dt = times[i] - initial.time;
            const Eigen::VectorXcd phase = (modes.lambda * dt).array().exp();
            traj.states.push_back(
                AmplitudeState::from_stacked(modes.vectors * modes.coeff.cwiseProduct(phase), times[i]));
        }
        return traj;
    }

    // Near-defective: integrate d psi/dt = -i H psi directly.
    traj.propagator = Propagator::Ode;
    const Eigen::MatrixXcd gen = -kI * h.matrix;
    const Eigen::Index dim = gen.rows();
    auto rhs = [&](const OdeState& x, OdeState& dxdt, double) {
        Eigen::Map<Eigen::VectorXcd>(dxdt.data(), dim) = gen * Eigen::Map<const Eigen::VectorXcd>(x.data(), dim);
    };
    OdeState x = to_ode(psi0);
    auto stepper = odeint::make_dense_output(options.ode_tolerance, options.ode_tolerance,
                                             odeint::runge_kutta_dopri5<OdeState>());
    std::size_t idx = 0;
    auto observer = [&](const OdeState& s, double t) {
        if (idx++ == 0) return;
        traj.states.push_back(AmplitudeState::from_stacked(from_ode(s, dim), t));
    };
    if (times.size() > 1) {
        try {
            odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-3, observer,
                                    odeint::max_step_checker(10'000'000));
        } catch (const std::exception& e) {
            throw NumericalError(std::string("evolve: ODE fallback did not converge: ") + e.what());
        }
    }
    for (std::size_t i = 1; i < traj.states.size(); ++i) traj.states[i].time = times[i];
    return traj;
}

TimeAveragedPopulations time_averaged_populations(const EffectiveHamiltonian& h, const AmplitudeState& initial,
                                                  double horizon, AverageMethod method,
                                                  const EvolveOptions& options) {
    check_initial(h, initial);
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("time average: horizon must be positive");

    const Eigen::VectorXcd psi0 = initial.stacked();
    const auto n = static_cast<Eigen::Index>(h.n_atoms);
    const Eigen::Index dim = psi0.size();
    Modes modes = decompose(h, psi0);

    if (method == AverageMethod::Auto) {
        method = modes.hermitian || modes.condition <= options.condition_threshold ? AverageMethod::ClosedForm
                                                                                   : AverageMethod::Quadrature;
    } else if (method == AverageMethod::ClosedForm && !modes.hermitian &&
               modes.condition > options.condition_threshold) {
        throw NumericalError("time average: closed form requested for a near-defective Hamiltonian (condition " +
                             std::to_string(modes.condition) + ")");
    }

    TimeAveragedPopulations out;
    out.horizon = horizon;
    out.method = method;
    Eigen::VectorXd all(dim);

    if (method == AverageMethod::ClosedForm) {
        // P_j = sum_{m,m'} U_jm conj(U_jm') * avg of exp((lambda_m + conj lambda_m') t)
        const Eigen::MatrixXcd u = modes.vectors * modes.coeff.asDiagonal();
        Eigen::MatrixXcd phi(dim, dim);
        for (Eigen::Index m = 0; m < dim; ++m) {
            for (Eigen::Index mp = 0; mp < dim; ++mp) {
                std::complex<double> z = modes.lambda(m) + std::conj(modes.lambda(mp));
                if (modes.hermitian) z = {0.0, z.imag()};
                phi(m, mp) = exp_average(z * horizon);
            }
        }
        all = (u * phi).cwiseProduct(u.conjugate()).rowwise().sum().real();
    } else {
        // Augmented system: psi plus running integrals of |psi_k|^2.
        const Eigen::MatrixXcd gen = -kI * h.matrix;
        auto rhs = [&](const OdeState& x, OdeState& dxdt, double) {
            Eigen::Map<const Eigen::VectorXcd> psi(x.data(), dim);
            Eigen::Map<Eigen::VectorXcd> dpsi(dxdt.data(), dim);
            dpsi = gen * psi;
            for (Eigen::Index k = 0; k < dim; ++k) dxdt[static_cast<std::size_t>(dim + k)] = std::norm(psi(k));
        };
        OdeState x(static_cast<std::size_t>(2 * dim), 0.0);
        std::copy(psi0.data(), psi0.data() + dim, x.begin());
        const double tol = std::min(options.ode_tolerance, 1e-12);
        try {
            odeint::integrate_adaptive(odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<OdeState>()), rhs,
                                       x, 0.0, horizon, 1e-3);
        } catch (const std::exception& e) {
            throw NumericalError(std::string("time average: quadrature did not converge: ") + e.what());
        }
        for (Eigen::Index k = 0; k < dim; ++k) all(k) = x[static_cast<std::size_t>(dim + k)].real() / horizon;
    }

    all = all.cwiseMax(0.0).cwiseMin(1.0);
    out.pbar = all.head(n);
    out.photon = all(n);
    return out;
}

double time_averaged_population(const EffectiveHamiltonian& h, const AmplitudeState& initial, std::size_t site,
                                double horizon, AverageMethod method) {
    if (site >= h.n_atoms) throw std::invalid_argument("time_averaged_population: site index out of range");
    return time_averaged_populations(h, initial, horizon, method).pbar(static_cast<Eigen::Index>(site));
}

Eigen::VectorXd population_profile(const Trajectory& trajectory, double t) {
    if (trajectory.states.empty()) throw std::invalid_argument("population_profile: empty trajectory");
    const auto& ts = trajectory.times;
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    std::size_t idx;
    if (it == ts.end()) {
        idx = ts.size() - 1;
    } else if (it == ts.begin()) {
        idx = 0;
    } else {
        const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
        idx = (t - ts[hi - 1] <= ts[hi] - t) ? hi - 1 : hi;
    }
    const AmplitudeState& s = trajectory.states[idx];
    Eigen::VectorXd p(s.alpha.size() + 1);
    p.head(s.alpha.size()) = s.alpha.cwiseAbs2();
    p(s.alpha.size()) = std::norm(s.beta);
    return p;
}

Eigen::MatrixXcd dicke_basis(const ChainRealization& chain, double k0_phase) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    if (n == 0) throw std::invalid_argument("dicke_basis: empty chain");
    Eigen::VectorXcd phase(n);
    for (Eigen::Index k = 0; k < n; ++k)
        phase(k) = std::polar(1.0, k0_phase * chain.positions[static_cast<std::size_t>(k)]);

    Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(n, n);
    basis.col(0) = phase / std::sqrt(static_cast<double>(n));
    // |j> = (sum_{k<=j} e^{i phi_k}|r_k> - j e^{i phi_{j+1}}|r_{j+1}>) / sqrt(j(j+1))
    for (Eigen::Index j = 1; j < n; ++j) {
        const double norm = std::sqrt(static_cast<double>(j * (j + 1)));
        for (Eigen::Index k = 0; k < j; ++k) basis(k, j) = phase(k) / norm;
        basis(j, j) = -static_cast<double>(j) * phase(j) / norm;
    }
    return basis;
}

DickeAmplitudes to_dicke_basis(const AmplitudeState& state, const ChainRealization& chain, double k0_phase) {
    if (static_cast<std::size_t>(state.alpha.size()) != chain.size())
        throw std::invalid_argument("to_dicke_basis: state has " + std::to_string(state.alpha.size()) +
                                    " atomic amplitudes for a chain of " + std::to_string(chain.size()));
    const Eigen::VectorXcd proj = dicke_basis(chain, k0_phase).adjoint() * state.alpha;
    DickeAmplitudes d;
    d.eta_plus = proj(0);
    d.zeta = proj.tail(proj.size() - 1);
    d.nu = state.beta;
    return d;
}

Eigen::VectorXcd reconstruct_from_residues(const PartialFractionExpansion& expansion, double t) {
    Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(expansion.alpha0.size());
    for (const auto& term : expansion.terms) {
        if (term.pole.real() > 1e-12 * (1.0 + std::abs(term.pole)))
            throw NumericalError("reconstruct_from_residues: pole with positive real part " +
                                 std::to_string(term.pole.real()) + " would grow without bound");
        double poly = 1.0;
        for (std::size_t k = 1; k < term.power; ++k) poly *= t / static_cast<double>(k);
        alpha += term.residue * (poly * std::exp(term.pole * t));
    }
    return alpha;
}

}  // namespace chainqed

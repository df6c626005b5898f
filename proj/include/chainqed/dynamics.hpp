// dynamics.hpp — single-excitation propagation, time-averaged populations
// and the collective (timed-Dicke) basis.

#pragma once

#include "chainqed/model.hpp"
#include "chainqed/spectral.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

namespace chainqed {

struct AmplitudeState {
    Eigen::VectorXcd alpha;  // atomic amplitudes alpha_j
    std::complex<double> beta{};  // photon amplitude
    double time{0.0};

    double norm_squared() const { return alpha.squaredNorm() + std::norm(beta); }
    Eigen::VectorXcd stacked() const;  // (alpha_1..alpha_N, beta)

    // Atom `site` (0-based) excited, mode empty.
    static AmplitudeState site_excitation(std::size_t n_atoms, std::size_t site, double time = 0.0);
    static AmplitudeState from_stacked(const Eigen::VectorXcd& psi, double time);
};

enum class Propagator { Spectral, Ode };

struct Trajectory {
    std::vector<double> times;
    std::vector<AmplitudeState> states;
    Propagator propagator{Propagator::Spectral};

    // Row t: |alpha_1|^2 .. |alpha_N|^2, |beta|^2.
    Eigen::MatrixXd populations() const;
};

struct EvolveOptions {
    double condition_threshold{1e8};  // eigenvector condition number that triggers the ODE path
    double ode_tolerance{1e-10};      // absolute and relative
};

Trajectory evolve(const EffectiveHamiltonian& h, const AmplitudeState& initial, const std::vector<double>& times,
                  const EvolveOptions& options = {});

enum class AverageMethod { Auto, ClosedForm, Quadrature };

struct TimeAveragedPopulations {
    double horizon{0.0};
    Eigen::VectorXd pbar;  // per site
    double photon{0.0};
    AverageMethod method{AverageMethod::ClosedForm};  // the method actually used
};

// (1/T) * integral_0^T |alpha_j(t)|^2 dt for every site, measured from initial.time.
TimeAveragedPopulations time_averaged_populations(const EffectiveHamiltonian& h, const AmplitudeState& initial,
                                                  double horizon, AverageMethod method = AverageMethod::Auto,
                                                  const EvolveOptions& options = {});

double time_averaged_population(const EffectiveHamiltonian& h, const AmplitudeState& initial, std::size_t site,
                                double horizon, AverageMethod method = AverageMethod::Auto);

// Site probabilities followed by the photon probability at the grid time nearest to t.
Eigen::VectorXd population_profile(const Trajectory& trajectory, double t);

struct DickeAmplitudes {
    std::complex<double> eta_plus{};
    Eigen::VectorXcd zeta;  // N-1 amplitudes on the phased difference states
    std::complex<double> nu{};

    double norm_squared() const { return std::norm(eta_plus) + zeta.squaredNorm() + std::norm(nu); }
};

// Columns: |+>, |1>, ..., |N-1>. Atom k carries the phase exp(i * k0_phase * x_k)
// with x_k = k0*X_k from the chain; k0_phase = 1 is the physical timed-Dicke
// basis and k0_phase = 0 the unphased one.
Eigen::MatrixXcd dicke_basis(const ChainRealization& chain, double k0_phase);

DickeAmplitudes to_dicke_basis(const AmplitudeState& state, const ChainRealization& chain, double k0_phase);

// alpha(t) = sum_m sum_n r_{m,n} t^(n-1)/(n-1)! exp(lambda_m t).
Eigen::VectorXcd reconstruct_from_residues(const PartialFractionExpansion& expansion, double t);

}  // namespace chainqed

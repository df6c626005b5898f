#pragma once

#include "chainqed/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace chainqed {

enum class SweepKind {
    CouplingM,   // nearest-neighbour coupling M is the control parameter
    SpacingK0R,  // lattice spacing k0*d, whole chain rescaled, full long-range kernel
};

struct SweepAxis {
    SweepKind kind{SweepKind::CouplingM};
    std::vector<double> grid;

    void validate() const;
    double step() const;  // smallest spacing between grid points

    static SweepAxis linspace(SweepKind kind, double lo, double hi, std::size_t points);
};

// Everything a sweep holds fixed. The axis value is injected by
// hamiltonian_at: as the NN coupling for CouplingM, or as the new spacing of
// `chain` for SpacingK0R.
struct SweepContext {
    ChainRealization chain;
    SystemParams params;
    DipoleOrientation orientation{};
    std::optional<std::vector<double>> bond_scale;  // direct NN bond noise

    EffectiveHamiltonian hamiltonian_at(SweepKind kind, double value) const;
};

struct SweepOptions {
    std::size_t threads{1};
    std::size_t max_refinement_depth{24};
};

// Column c of eigenvalues/eigenvectors at every point belongs to curve c.
struct SpectrumSweep {
    SweepAxis axis;  // input grid plus any points inserted during tracking
    SweepContext context;
    std::vector<Eigen::VectorXcd> eigenvalues;
    std::vector<Eigen::MatrixXcd> eigenvectors;  // unit-norm columns
    bool hermitian{true};

    std::size_t n_points() const noexcept { return eigenvalues.size(); }
    std::size_t n_curves() const noexcept { return eigenvalues.empty() ? 0 : eigenvalues.front().size(); }
    double spectral_range() const;
};

SpectrumSweep eigen_sweep(const SweepContext& context, const SweepAxis& axis, const SweepOptions& options = {});

// Eigenvalues of h sorted by (real, imag); vectors normalized.
struct Eigensystem {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;
};
Eigensystem eigensystem(const EffectiveHamiltonian& h);

enum class CrossingKind { Crossing, AvoidedCrossing };

struct CrossingEvent {
    double parameter{0.0};
    std::pair<std::size_t, std::size_t> curves{0, 0};
    double min_gap{0.0};
    CrossingKind kind{CrossingKind::AvoidedCrossing};
    std::complex<double> energy{};  // mean of the two eigenvalues at the minimum
};

struct CrossingTolerances {
    std::optional<double> tau_cross;   // default 1e-6 * spectral range
    std::optional<double> tau_refine;  // default 1e-10 * axis span
};

struct CrossingReport {
    std::vector<CrossingEvent> events;  // ascending in parameter
    double tau_cross{0.0};
    double tau_refine{0.0};

    std::size_t count(CrossingKind kind) const;
};

CrossingReport detect_crossings(const SpectrumSweep& sweep, const CrossingTolerances& tolerances = {});

// Poles of the resolvent (s + iH)^-1 in the Laplace variable s.
struct Pole {
    std::complex<double> location;  // lambda = -i * epsilon
    std::size_t order{1};
    double cluster_radius{0.0};     // spread of the merged eigenvalues
};

struct PoleSet {
    std::vector<Pole> poles;
    double tau_degeneracy{0.0};

    std::size_t total_order() const;
    std::size_t max_order() const;
};

// Eigenvalues closer than tau_degeneracy (default 1e-8 * spectral range) are
// merged into one pole whose order is the cluster size.
PoleSet characteristic_poles(const EffectiveHamiltonian& h, std::optional<double> tau_degeneracy = std::nullopt);

struct ResidueTerm {
    std::complex<double> pole;
    std::size_t power{1};      // contributes residue * t^(power-1)/(power-1)! * exp(pole*t)
    Eigen::VectorXcd residue;  // atomic amplitudes
};

struct PartialFractionExpansion {
    std::vector<ResidueTerm> terms;
    Eigen::VectorXcd alpha0;
    double condition{1.0};  // worst amplification of rounding in the contour sums
};

// alpha0 holds the N atomic amplitudes; the photon starts empty.
PartialFractionExpansion residue_expansion(const EffectiveHamiltonian& h, const Eigen::VectorXcd& alpha0,
                                           const PoleSet& poles);

// Roots of the characteristic cubic of the two-atom-plus-mode problem,
// ascending. Atoms at omega1, omega2 coupled by M, mode at omega with
// couplings kappa_a, kappa_b.
std::array<double, 3> two_atom_eigenvalues(double omega1, double omega2, double omega, double m, double kappa_a,
                                           double kappa_b);

}  // namespace chainqed

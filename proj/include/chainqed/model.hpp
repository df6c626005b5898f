// model.hpp — chain geometry, dipole-dipole kernels and the single-excitation
// effective Hamiltonian of N two-level emitters sharing one field mode.
//
// Units: the single-atom radiative rate gamma is 1 and the resonant
// wavenumber k0 is 1, so every frequency is in units of gamma and every
// length is a dimensionless k0*R.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

namespace chainqed {

// How a realization's positional noise scales.
//   Spacing:  x_j = d * (j + xi_j)        (deviation measured in lattice spacings)
//   Position: x_j = j * d * (1 + xi_j)    (deviation relative to the nominal position)
enum class DisorderReference { Spacing, Position };

struct ChainGeometrySpec {
    std::size_t n_atoms{8};
    double nominal_spacing{1.0};  // k0*d
    double disorder_sigma{0.0};   // relative standard deviation of xi_j
    double min_separation{1e-2};  // k0*R floor; closer realizations are resampled
    DisorderReference reference{DisorderReference::Spacing};
    std::size_t max_attempts{10000};

    // Throws std::invalid_argument on a violated invariant.
    void validate() const;
};

struct ChainRealization {
    std::vector<double> positions;  // k0*X_j, strictly increasing
    std::uint64_t seed{0};
    ChainGeometrySpec spec;
    std::size_t rejections{0};      // resampled draws before acceptance

    std::size_t size() const noexcept { return positions.size(); }
    double separation(std::size_t i, std::size_t j) const;

    // Same realization with every coordinate multiplied by
    // new_spacing / spec.nominal_spacing (the floor is scaled alongside).
    ChainRealization scaled_to_spacing(double new_spacing) const;

    // Perfectly periodic chain x_j = j * spacing, j = 1..n.
    static ChainRealization ordered(std::size_t n, double spacing);
};

struct DipoleOrientation {
    double theta{std::numbers::pi / 2};  // angle between dipole and chain axis

    static constexpr DipoleOrientation pi() noexcept { return {std::numbers::pi / 2}; }
    static constexpr DipoleOrientation sigma() noexcept { return {0.0}; }
    void validate() const;
};

enum class DissipationMode { None, Collective };

struct SystemParams {
    double omega{0.2};            // field-mode frequency
    double omega0{0.0};           // atomic transition frequency
    std::vector<double> kappa;    // atom-mode couplings, one per atom
    double gamma{1.0};            // unit of frequency, fixed to 1
    DissipationMode dissipation{DissipationMode::None};

    std::size_t n_atoms() const noexcept { return kappa.size(); }
    void validate() const;

    static SystemParams uniform(std::size_t n, double detuning, double coupling,
                                DissipationMode mode = DissipationMode::None);
};

// Multiplies each kappa_j by (1 + eta_j), eta_j ~ Normal(0, sigma_kappa).
SystemParams perturb_couplings(SystemParams params, double sigma_kappa, std::uint64_t seed);

// Nearest-neighbour coupling with M as a free parameter. Bond b (atoms b, b+1)
// gets coupling * scale_b. Without explicit bond_scale the scale follows the
// near-zone law (d / R_b)^3 of the realization, which is exactly 1 for an
// ordered chain.
struct NearestNeighbor {
    double coupling{0.0};
    std::optional<std::vector<double>> bond_scale;
};

// Every pair coupled through the full retarded kernel at its separation.
struct LongRange {};

using InteractionMode = std::variant<NearestNeighbor, LongRange>;

// Multiplicative Gaussian bond noise 1 + xi_b, the "direct" disorder channel.
std::vector<double> sample_bond_noise(std::size_t n_bonds, double sigma, std::uint64_t seed);

struct SelfEnergy {
    Eigen::MatrixXd coherent;     // M_ij, zero diagonal
    Eigen::MatrixXd dissipative;  // gamma_ij, diagonal gamma
    DissipationMode mode{DissipationMode::None};

    std::size_t n_atoms() const noexcept { return static_cast<std::size_t>(coherent.rows()); }
};

// Basis: |r_1,0>, ..., |r_N,0>, |e...e,1>.
struct EffectiveHamiltonian {
    Eigen::MatrixXcd matrix;
    std::size_t n_atoms{0};

    std::size_t dim() const noexcept { return n_atoms + 1; }
    std::size_t photon_index() const noexcept { return n_atoms; }
    bool is_hermitian(double tol = 1e-12) const;
};

ChainRealization sample_chain(const ChainGeometrySpec& spec, std::uint64_t seed);

// Coherent RDDI kernel J(theta, x). At theta = pi/2 this is
// (3/4) [cos x / x^3 + sin x / x^2 - cos x / x].
double rddi_coupling(double x, DipoleOrientation orientation = DipoleOrientation::pi());

// Cross-damping kernel gamma_ij / gamma; tends to 1 as x -> 0.
double dissipation_rate(double x, DipoleOrientation orientation = DipoleOrientation::pi());

SelfEnergy build_self_energy(const ChainRealization& chain, DipoleOrientation orientation,
                             const InteractionMode& interaction, const SystemParams& params);

EffectiveHamiltonian build_hamiltonian(const SelfEnergy& self_energy, const SystemParams& params);

}  // namespace chainqed

#pragma once

#include "chainqed/dynamics.hpp"
#include "chainqed/model.hpp"
#include "chainqed/spectral.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace chainqed {

// theta -> time-averaged population of the measured site.
using PopulationModel = std::function<double(double)>;

// P_bar_site(theta) for the Hamiltonian family of `context` along `kind`, with
// atom `initial_site` excited at t = 0.
PopulationModel population_model(SweepContext context, SweepKind kind, std::size_t site, double horizon,
                                 std::size_t initial_site = 0);

struct DerivativeOptions {
    double relative_step{1e-4};   // h = relative_step * |theta| ...
    double min_step{1e-6};        // ... but never below this
    double agreement{1e-4};       // Richardson pair relative tolerance
    std::size_t max_halvings{8};
    double probability_floor{1e-12};
};

struct FisherPoint {
    double theta{0.0};
    double pbar{0.0};
    double derivative{0.0};
    double fi{0.0};
    double step{0.0};     // final step used
    bool smooth{true};    // false if the Richardson pair never agreed
};

// Two-outcome Fisher information d^2 / (p (1 - p)), p clamped to [floor, 1 - floor].
double fisher_from_derivative(double derivative, double p, double floor = 1e-12);
// Same quantity as the explicit sum over outcomes {p, 1 - p}.
double fisher_two_outcome_sum(double derivative, double p, double floor = 1e-12);

FisherPoint fisher_point(const PopulationModel& model, double theta, const DerivativeOptions& options = {});
double fisher_information(const PopulationModel& model, double theta, const DerivativeOptions& options = {});

struct FisherOptions {
    DerivativeOptions derivative{};
    std::size_t site{0};      // recorded in the curve
    double horizon{1e4};      // recorded in the curve
    std::size_t threads{1};
    bool refine_peak{true};
};

struct FisherCurve {
    SweepAxis axis;
    std::vector<double> pbar;
    std::vector<double> derivative;
    std::vector<double> fi;
    std::vector<double> step;
    std::vector<bool> smooth;
    std::size_t site{0};
    double horizon{0.0};

    // Global maximum after local refinement.
    double peak_parameter{0.0};
    double peak_fi{0.0};
    double peak_resolution{0.0};
};

FisherCurve fisher_sweep(const PopulationModel& model, const SweepAxis& axis, const FisherOptions& options = {});

enum class DisorderChannel {
    Positional,  // sample positions, couplings follow from geometry
    BondNoise,   // ordered positions, each NN bond scaled by 1 + xi_b
};

enum class EnsembleAggregation {
    PerRealization,      // Fisher information of every realization, then statistics
    AveragedPopulation,  // Fisher information of the ensemble-averaged P_bar
};

struct EnsembleOptions {
    std::vector<double> sigma_grid{0.0, 0.1, 0.2, 0.4};
    std::size_t n_realizations{50};
    std::uint64_t base_seed{0};
    DisorderChannel channel{DisorderChannel::Positional};
    EnsembleAggregation aggregation{EnsembleAggregation::PerRealization};
    std::size_t initial_site{0};
    bool keep_curves{false};
    FisherOptions fisher{};
};

struct EnsembleSummary {
    double sigma{0.0};
    std::vector<double> peak_fi;        // one per realization (one entry when aggregated)
    std::vector<double> peak_location;
    std::vector<std::uint64_t> seeds;
    double median_peak_fi{0.0};
    double q1_peak_fi{0.0};
    double q3_peak_fi{0.0};
    double median_location{0.0};
    double location_iqr{0.0};
    std::vector<FisherCurve> curves;    // filled when keep_curves is set
};

struct DisorderEnsembleResult {
    std::vector<EnsembleSummary> per_sigma;
    std::size_t n_realizations{0};
    std::uint64_t base_seed{0};
    EnsembleAggregation aggregation{EnsembleAggregation::PerRealization};
    DisorderChannel channel{DisorderChannel::Positional};
};

// Realization r uses seed derive_seed(base_seed, r) at every sigma, so the
// sigma dependence is not masked by draw-to-draw scatter.
DisorderEnsembleResult disorder_ensemble(const ChainGeometrySpec& geometry, const SystemParams& params,
                                         DipoleOrientation orientation, const SweepAxis& axis,
                                         const EnsembleOptions& options);

// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

struct CramerRaoBound {
    double fi{0.0};
    std::size_t n_measurements{1};
    double bound{0.0};  // +inf when fi == 0
    bool bounded() const;
};

CramerRaoBound cramer_rao_bound(double fi, std::size_t n_measurements);

}  // namespace chainqed

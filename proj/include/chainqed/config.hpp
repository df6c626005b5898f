#pragma once

#include "chainqed/estimation.hpp"
#include "chainqed/model.hpp"
#include "chainqed/spectral.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainqed {

// Invalid or unparseable configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Spectrum, TrappingSweep, Snapshots, FisherSweep, DisorderEnsemble, TwoAtomOracle };

std::string to_string(ExperimentKind kind);

struct SnapshotSettings {
    std::vector<double> parameters;  // explicit axis values
    bool at_crossings{true};         // prepend the crossings found on the axis
    double t_max{200.0};
    std::size_t t_points{2001};
    double k0_phase{1.0};            // phase factor of the timed-Dicke basis
};

struct TwoAtomSettings {
    double omega1{0.0};
    double omega2{0.0};
    double omega{0.2};
    double m{0.1};
    double kappa_a{0.2};
    double kappa_b{0.2};
    std::size_t random_draws{0};
};

struct ExperimentConfig {
    ExperimentKind kind{ExperimentKind::Spectrum};
    std::string name{"experiment"};

    SystemParams params{SystemParams::uniform(8, 0.2, 0.2)};
    double kappa_sigma{0.0};  // multiplicative noise on kappa_j
    DipoleOrientation orientation{};

    ChainGeometrySpec geometry{};
    DisorderChannel channel{DisorderChannel::Positional};

    SweepAxis axis{SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 501)};
    double horizon{1e4};
    std::uint64_t seed{0};
    std::size_t site{0};          // measured site, 0-based internally
    std::size_t initial_site{0};  // initially excited site, 0-based internally

    CrossingTolerances crossings{};
    DerivativeOptions derivative{};
    std::vector<double> sigma_grid{0.0, 0.1, 0.2, 0.4};
    std::size_t n_realizations{50};
    EnsembleAggregation aggregation{EnsembleAggregation::PerRealization};
    SnapshotSettings snapshots{};
    TwoAtomSettings two_atom{};

    bool normalize{false};
    bool plots{true};
    std::size_t threads{1};
    std::string output_dir{"out"};

    // Fully resolved configuration, 1-based site indices as in the input format.
    nlohmann::json to_json() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace chainqed

#pragma once

#include "chainqed/config.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace chainqed {

// One output file held in memory until the whole run has succeeded.
struct Artifact {
    std::string file;  // name relative to the output directory
    std::string content;
    bool is_plot{false};
};

struct ExperimentOutput {
    std::vector<Artifact> artifacts;
    nlohmann::json summary;
    std::vector<std::uint64_t> seeds;  // every seed that fed a random draw
};

// Digest of the physics-relevant configuration (output location, thread
// count and plot switch excluded, since they never change data bytes).
std::string config_digest(const ExperimentConfig& cfg);

// Hamiltonian family described by cfg with its disorder realization drawn.
// Seeds that fed a random draw are appended to `seeds` when given.
SweepContext experiment_context(const ExperimentConfig& cfg, std::vector<std::uint64_t>* seeds = nullptr);

// Runs the pipeline without touching the filesystem.
ExperimentOutput compute_experiment(const ExperimentConfig& cfg);

struct OutputFileRecord {
    std::string path;
    std::string sha256;
    std::size_t bytes{0};
};

struct RunManifest {
    nlohmann::json config;
    std::string config_sha256;
    std::string version;
    std::uint64_t seed{0};
    std::vector<std::uint64_t> derived_seeds;
    double wall_seconds{0.0};
    std::vector<OutputFileRecord> files;
    nlohmann::json summary;
    std::string disorder_semantics;
    std::string manifest_path;

    nlohmann::json to_json() const;
};

// Computes everything first, then writes data, plots and the manifest into
// cfg.output_dir. A failure before the write phase leaves no files behind.
RunManifest run_experiment(const ExperimentConfig& cfg);

std::string library_version();

}  // namespace chainqed

// chainqed_run — batch runner: one JSON config in, CSV/SVG data and a manifest out.
//
// Exit status: 0 success, 2 configuration error, 3 numerical failure,
// 4 filesystem error.

#include "chainqed/common.hpp"
#include "chainqed/config.hpp"
#include "chainqed/experiment.hpp"
#include "chainqed/output.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode : int { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-excitation chain QED experiment runner"};
    app.set_version_flag("--version", chainqed::library_version());

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool no_plots = false;
    bool normalize = false;
    std::optional<std::size_t> threads;

    app.add_option("config", config_path, "JSON experiment configuration")->required();
    app.add_option("--seed", seed, "override the base seed");
    app.add_option("--out", out_dir, "output directory (overrides output_dir)");
    app.add_flag("--no-plots", no_plots, "skip SVG output");
    app.add_option("--threads", threads, "worker threads (results do not depend on this)")
        ->check(CLI::PositiveNumber);
    app.add_flag("--normalize", normalize, "max-normalize plotted populations (CSV stays raw)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        chainqed::ExperimentConfig cfg = chainqed::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (out_dir) cfg.output_dir = *out_dir;
        if (threads) cfg.threads = *threads;
        if (no_plots) cfg.plots = false;
        if (normalize) cfg.normalize = true;

        const chainqed::RunManifest m = chainqed::run_experiment(cfg);
        std::cout << cfg.name << " (" << chainqed::to_string(cfg.kind) << ") finished in " << m.wall_seconds
                  << " s\n";
        for (const auto& f : m.files) std::cout << "  " << f.path << "  " << f.sha256 << "\n";
        std::cout << "  manifest: " << m.manifest_path << "\n";
        std::cout << "summary: " << m.summary.dump() << "\n";
        return kOk;
    } catch (const chainqed::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const chainqed::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const chainqed::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
}

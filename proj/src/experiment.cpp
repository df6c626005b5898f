#include "chainqed/experiment.hpp"

#include "chainqed/common.hpp"
#include "chainqed/dynamics.hpp"
#include "chainqed/estimation.hpp"
#include "chainqed/output.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>

#ifndef CHAINQED_VERSION
#define CHAINQED_VERSION "0.0.0"
#endif

namespace chainqed {

using nlohmann::json;

namespace {

// Stream labels for seeds split off the run seed.
constexpr std::uint64_t kKappaStream = 1;
constexpr std::uint64_t kOracleStream = 2;

struct Setup {
    SweepContext context;
    std::vector<std::uint64_t> seeds;
};

Setup make_setup(const ExperimentConfig& cfg) {
    Setup s;
    s.context = experiment_context(cfg, &s.seeds);
    return s;
}

std::string parameter_column(SweepKind kind) {
    return kind == SweepKind::CouplingM ? "M (gamma)" : "k0R (dimensionless)";
}

std::string parameter_label(SweepKind kind) {
    return kind == SweepKind::CouplingM ? "M (units of gamma)" : "k0 R";
}

std::string join_numbers(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v[i]);
    return out;
}

std::vector<std::string> base_comments(const ExperimentConfig& cfg, const Setup& setup) {
    return {
        "experiment " + to_string(cfg.kind) + " '" + cfg.name + "'",
        "config sha256 " + config_digest(cfg),
        "positions k0X: " + join_numbers(setup.context.chain.positions),
    };
}

Artifact csv_artifact(const std::string& file, const Dataset& data) { return {file, to_csv(data), false}; }
Artifact svg_artifact(const std::string& file, const std::string& svg) { return {file, svg, true}; }

json event_json(const CrossingEvent& e) {
    return {{"parameter", e.parameter},
            {"curves", {e.curves.first + 1, e.curves.second + 1}},
            {"min_gap", e.min_gap},
            {"kind", e.kind == CrossingKind::Crossing ? "crossing" : "avoided_crossing"}};
}

Dataset crossing_dataset(const CrossingReport& report, SweepKind kind, std::vector<std::string> comments) {
    Dataset d;
    comments.push_back("tau_cross " + format_double(report.tau_cross) + " tau_refine " +
                       format_double(report.tau_refine));
    d.comments = std::move(comments);
    d.columns = {parameter_column(kind), "curve_a (index)", "curve_b (index)", "min_gap (gamma)", "kind (label)",
                 "energy_re (gamma)", "energy_im (gamma)"};
    for (const auto& e : report.events) {
        d.add_row({e.parameter, static_cast<std::int64_t>(e.curves.first + 1),
                   static_cast<std::int64_t>(e.curves.second + 1), e.min_gap,
                   std::string(e.kind == CrossingKind::Crossing ? "crossing" : "avoided_crossing"), e.energy.real(),
                   e.energy.imag()});
    }
    return d;
}

std::vector<double> crossing_parameters(const CrossingReport& report) {
    std::vector<double> xs;
    for (const auto& e : report.events) {
        if (e.kind == CrossingKind::Crossing) xs.push_back(e.parameter);
    }
    return xs;
}

std::vector<double> avoided_parameters(const CrossingReport& report) {
    std::vector<double> xs;
    for (const auto& e : report.events) {
        if (e.kind == CrossingKind::AvoidedCrossing) xs.push_back(e.parameter);
    }
    return xs;
}

json report_summary(const CrossingReport& report) {
    json events = json::array();
    for (const auto& e : report.events) events.push_back(event_json(e));
    return {{"crossings", report.count(CrossingKind::Crossing)},
            {"avoided_crossings", report.count(CrossingKind::AvoidedCrossing)},
            {"tau_cross", report.tau_cross},
            {"tau_refine", report.tau_refine},
            {"events", events}};
}

// ---------------------------------------------------------------------------

void run_spectrum(const ExperimentConfig& cfg, const Setup& setup, ExperimentOutput& out) {
    SweepOptions so;
    so.threads = cfg.threads;
    const SpectrumSweep sweep = eigen_sweep(setup.context, cfg.axis, so);
    const CrossingReport report = detect_crossings(sweep, cfg.crossings);
    const auto nc = static_cast<Eigen::Index>(sweep.n_curves());
    const bool complex_values = !sweep.hermitian;

    Dataset d;
    d.comments = base_comments(cfg, setup);
    d.columns.push_back(parameter_column(cfg.axis.kind));
    for (Eigen::Index c = 0; c < nc; ++c) d.columns.push_back("eps_" + std::to_string(c + 1) + " (gamma)");
    if (complex_values) {
        for (Eigen::Index c = 0; c < nc; ++c) d.columns.push_back("im_eps_" + std::to_string(c + 1) + " (gamma)");
    }
    for (std::size_t p = 0; p < sweep.n_points(); ++p) {
        std::vector<Cell> row{sweep.axis.grid[p]};
        for (Eigen::Index c = 0; c < nc; ++c) row.emplace_back(sweep.eigenvalues[p](c).real());
        if (complex_values) {
            for (Eigen::Index c = 0; c < nc; ++c) row.emplace_back(sweep.eigenvalues[p](c).imag());
        }
        d.add_row(std::move(row));
    }
    out.artifacts.push_back(csv_artifact(cfg.name + "_spectrum.csv", d));
    out.artifacts.push_back(
        csv_artifact(cfg.name + "_crossings.csv", crossing_dataset(report, cfg.axis.kind, base_comments(cfg, setup))));

    LinePlot plot;
    plot.title = "Single-excitation eigenvalues";
    plot.x_label = parameter_label(cfg.axis.kind);
    plot.y_label = complex_values ? "Re eigenvalue (gamma)" : "eigenvalue (gamma)";
    for (Eigen::Index c = 0; c < nc; ++c) {
        Series s;
        s.x = sweep.axis.grid;
        for (std::size_t p = 0; p < sweep.n_points(); ++p) s.y.push_back(sweep.eigenvalues[p](c).real());
        plot.series.push_back(std::move(s));
    }
    plot.markers_x = crossing_parameters(report);
    const auto avoided = avoided_parameters(report);
    plot.markers_x.insert(plot.markers_x.end(), avoided.begin(), avoided.end());
    out.artifacts.push_back(svg_artifact(cfg.name + "_spectrum.svg", render_svg(plot)));

    out.summary = report_summary(report);
    out.summary["grid_points"] = sweep.n_points();
}

void run_trapping(const ExperimentConfig& cfg, const Setup& setup, ExperimentOutput& out) {
    SweepOptions so;
    so.threads = cfg.threads;
    const CrossingReport report = detect_crossings(eigen_sweep(setup.context, cfg.axis, so), cfg.crossings);

    const std::size_t n = cfg.geometry.n_atoms;
    const std::size_t np = cfg.axis.grid.size();
    std::vector<TimeAveragedPopulations> avg(np);
    parallel_for(np, cfg.threads, [&](std::size_t i) {
        const EffectiveHamiltonian h = setup.context.hamiltonian_at(cfg.axis.kind, cfg.axis.grid[i]);
        avg[i] = time_averaged_populations(h, AmplitudeState::site_excitation(n, cfg.initial_site), cfg.horizon);
    });

    Dataset d;
    d.comments = base_comments(cfg, setup);
    d.comments.push_back("horizon T " + format_double(cfg.horizon) + " (1/gamma), initially excited site " +
                         std::to_string(cfg.initial_site + 1));
    d.columns.push_back(parameter_column(cfg.axis.kind));
    for (std::size_t j = 0; j < n; ++j) d.columns.push_back("pbar_" + std::to_string(j + 1) + " (probability)");
    d.columns.push_back("pbar_photon (probability)");
    for (std::size_t i = 0; i < np; ++i) {
        std::vector<Cell> row{cfg.axis.grid[i]};
        for (std::size_t j = 0; j < n; ++j) row.emplace_back(avg[i].pbar(static_cast<Eigen::Index>(j)));
        row.emplace_back(avg[i].photon);
        d.add_row(std::move(row));
    }
    out.artifacts.push_back(csv_artifact(cfg.name + "_trapping.csv", d));
    out.artifacts.push_back(
        csv_artifact(cfg.name + "_crossings.csv", crossing_dataset(report, cfg.axis.kind, base_comments(cfg, setup))));

    LinePlot plot;
    plot.title = "Time-averaged population of atom " + std::to_string(cfg.site + 1) +
                 (cfg.normalize ? " (normalized to 1)" : "");
    plot.x_label = parameter_label(cfg.axis.kind);
    plot.y_label = cfg.normalize ? "Pbar / max Pbar" : "Pbar";
    Series s;
    s.label = "atom " + std::to_string(cfg.site + 1);
    s.x = cfg.axis.grid;
    for (std::size_t i = 0; i < np; ++i) s.y.push_back(avg[i].pbar(static_cast<Eigen::Index>(cfg.site)));
    if (cfg.normalize) {
        const double peak = *std::max_element(s.y.begin(), s.y.end());
        if (peak > 0.0) {
            for (double& y : s.y) y /= peak;
        }
    }
    plot.series.push_back(std::move(s));
    plot.markers_x = crossing_parameters(report);
    const auto avoided = avoided_parameters(report);
    plot.markers_x.insert(plot.markers_x.end(), avoided.begin(), avoided.end());
    out.artifacts.push_back(svg_artifact(cfg.name + "_trapping.svg", render_svg(plot)));

    out.summary = report_summary(report);
    std::size_t best = 0;
    for (std::size_t i = 1; i < np; ++i) {
        if (avg[i].pbar(static_cast<Eigen::Index>(cfg.site)) > avg[best].pbar(static_cast<Eigen::Index>(cfg.site)))
            best = i;
    }
    out.summary["max_pbar"] = avg[best].pbar(static_cast<Eigen::Index>(cfg.site));
    out.summary["max_pbar_parameter"] = cfg.axis.grid[best];
}

void run_snapshots(const ExperimentConfig& cfg, const Setup& setup, ExperimentOutput& out) {
    std::vector<double> parameters;
    json summary;
    if (cfg.snapshots.at_crossings) {
        const CrossingReport report = detect_crossings(eigen_sweep(setup.context, cfg.axis), cfg.crossings);
        parameters = crossing_parameters(report);
        summary = report_summary(report);
    }
    parameters.insert(parameters.end(), cfg.snapshots.parameters.begin(), cfg.snapshots.parameters.end());
    if (parameters.empty())
        throw NumericalError("snapshots: no crossing found on the axis and no explicit parameters given");

    const std::size_t n = cfg.geometry.n_atoms;
    const SweepAxis times_axis = SweepAxis::linspace(SweepKind::CouplingM, 0.0, cfg.snapshots.t_max,
                                                     cfg.snapshots.t_points);
    const AmplitudeState initial = AmplitudeState::site_excitation(n, cfg.initial_site);

    Dataset overview;
    overview.comments = base_comments(cfg, setup);
    overview.comments.push_back("long-time averages over T " + format_double(cfg.horizon) + " (1/gamma)");
    overview.columns = {"index (count)", parameter_column(cfg.axis.kind)};
    for (std::size_t j = 0; j < n; ++j) overview.columns.push_back("pbar_" + std::to_string(j + 1) + " (probability)");
    overview.columns.push_back("pbar_photon (probability)");

    for (std::size_t k = 0; k < parameters.size(); ++k) {
        const double param = parameters[k];
        const EffectiveHamiltonian h = setup.context.hamiltonian_at(cfg.axis.kind, param);
        const Trajectory traj = evolve(h, initial, times_axis.grid);
        const ChainRealization chain = cfg.axis.kind == SweepKind::SpacingK0R
                                           ? setup.context.chain.scaled_to_spacing(param)
                                           : setup.context.chain;

        Dataset d;
        d.comments = base_comments(cfg, setup);
        d.comments.push_back(parameter_column(cfg.axis.kind) + " = " + format_double(param));
        d.columns.push_back("t (1/gamma)");
        for (std::size_t j = 0; j < n; ++j) d.columns.push_back("p_" + std::to_string(j + 1) + " (probability)");
        d.columns.insert(d.columns.end(), {"p_photon (probability)", "dicke_plus (probability)",
                                           "dicke_other (probability)", "norm (probability)"});
        Eigen::MatrixXd heat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(traj.times.size()));
        for (std::size_t t = 0; t < traj.times.size(); ++t) {
            const AmplitudeState& st = traj.states[t];
            const DickeAmplitudes dk = to_dicke_basis(st, chain, cfg.snapshots.k0_phase);
            std::vector<Cell> row{traj.times[t]};
            for (std::size_t j = 0; j < n; ++j) {
                const double p = std::norm(st.alpha(static_cast<Eigen::Index>(j)));
                row.emplace_back(p);
                heat(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t)) = p;
            }
            row.emplace_back(std::norm(st.beta));
            row.emplace_back(std::norm(dk.eta_plus));
            row.emplace_back(dk.zeta.squaredNorm());
            row.emplace_back(st.norm_squared());
            d.add_row(std::move(row));
        }
        const std::string stem = cfg.name + "_trajectory_" + std::to_string(k + 1);
        out.artifacts.push_back(csv_artifact(stem + ".csv", d));

        Heatmap map;
        map.title = "Site populations at " + parameter_column(cfg.axis.kind) + " = " + format_double(param);
        map.x_label = "t (1/gamma)";
        map.y_label = "atom";
        map.x = traj.times;
        for (std::size_t j = 0; j < n; ++j) map.y.push_back(static_cast<double>(j + 1));
        map.values = heat;
        out.artifacts.push_back(svg_artifact(stem + ".svg", render_svg(map)));

        const TimeAveragedPopulations avg = time_averaged_populations(h, initial, cfg.horizon);
        std::vector<Cell> row{static_cast<std::int64_t>(k + 1), param};
        for (std::size_t j = 0; j < n; ++j) row.emplace_back(avg.pbar(static_cast<Eigen::Index>(j)));
        row.emplace_back(avg.photon);
        overview.add_row(std::move(row));
    }
    out.artifacts.push_back(csv_artifact(cfg.name + "_snapshots.csv", overview));
    summary["parameters"] = parameters;
    out.summary = summary;
}

void run_fisher(const ExperimentConfig& cfg, const Setup& setup, ExperimentOutput& out) {
    FisherOptions fo;
    fo.derivative = cfg.derivative;
    fo.site = cfg.site;
    fo.horizon = cfg.horizon;
    fo.threads = cfg.threads;
    const PopulationModel model =
        population_model(setup.context, cfg.axis.kind, cfg.site, cfg.horizon, cfg.initial_site);
    const FisherCurve curve = fisher_sweep(model, cfg.axis, fo);
    const bool nnn = cfg.axis.kind == SweepKind::SpacingK0R;

    Dataset d;
    d.comments = base_comments(cfg, setup);
    d.comments.push_back("measured site " + std::to_string(cfg.site + 1) + ", horizon T " +
                         format_double(cfg.horizon) + " (1/gamma)");
    d.comments.push_back("refined peak at " + format_double(curve.peak_parameter) + " with FI " +
                         format_double(curve.peak_fi) + " (resolution " + format_double(curve.peak_resolution) + ")");
    d.columns.push_back(parameter_column(cfg.axis.kind));
    if (nnn) d.columns.push_back("inv_k0R (dimensionless)");
    d.columns.insert(d.columns.end(), {"pbar (probability)", "dpbar (per parameter unit)",
                                       "fisher (per parameter unit squared)", "log10_fisher (log10)",
                                       "cramer_rao_variance (parameter unit squared)", "step (parameter unit)",
                                       "smooth (flag)"});
    for (std::size_t i = 0; i < curve.fi.size(); ++i) {
        const double x = cfg.axis.grid[i];
        std::vector<Cell> row{x};
        if (nnn) row.emplace_back(1.0 / x);
        row.emplace_back(curve.pbar[i]);
        row.emplace_back(curve.derivative[i]);
        row.emplace_back(curve.fi[i]);
        row.emplace_back(curve.fi[i] > 0.0 ? std::log10(curve.fi[i]) : -std::numeric_limits<double>::infinity());
        row.emplace_back(cramer_rao_bound(curve.fi[i], 1).bound);
        row.emplace_back(curve.step[i]);
        row.emplace_back(static_cast<std::int64_t>(curve.smooth[i] ? 1 : 0));
        d.add_row(std::move(row));
    }
    out.artifacts.push_back(csv_artifact(cfg.name + "_fisher.csv", d));

    LinePlot plot;
    plot.title = "Fisher information of Pbar_" + std::to_string(cfg.site + 1);
    plot.x_label = nnn ? "1 / (k0 R)" : parameter_label(cfg.axis.kind);
    plot.y_label = "Fisher information";
    plot.log_y = true;
    Series s;
    for (std::size_t i = 0; i < curve.fi.size(); ++i) {
        s.x.push_back(nnn ? 1.0 / cfg.axis.grid[i] : cfg.axis.grid[i]);
        s.y.push_back(curve.fi[i]);
    }
    plot.series.push_back(std::move(s));
    plot.markers_x = {nnn ? 1.0 / curve.peak_parameter : curve.peak_parameter};
    out.artifacts.push_back(svg_artifact(cfg.name + "_fisher.svg", render_svg(plot)));

    out.summary = {{"peak_parameter", curve.peak_parameter},
                   {"peak_fi", curve.peak_fi},
                   {"peak_resolution", curve.peak_resolution},
                   {"cramer_rao_at_peak", cramer_rao_bound(curve.peak_fi, 1).bound}};
}

void run_ensemble(const ExperimentConfig& cfg, const Setup& setup, ExperimentOutput& out) {
    EnsembleOptions eo;
    eo.sigma_grid = cfg.sigma_grid;
    eo.n_realizations = cfg.n_realizations;
    eo.base_seed = cfg.seed;
    eo.channel = cfg.channel;
    eo.aggregation = cfg.aggregation;
    eo.initial_site = cfg.initial_site;
    eo.fisher.derivative = cfg.derivative;
    eo.fisher.site = cfg.site;
    eo.fisher.horizon = cfg.horizon;
    eo.fisher.threads = cfg.threads;
    const DisorderEnsembleResult res =
        disorder_ensemble(cfg.geometry, setup.context.params, cfg.orientation, cfg.axis, eo);

    Dataset summary;
    summary.comments = base_comments(cfg, setup);
    summary.comments.push_back(std::string("aggregation ") +
                               (cfg.aggregation == EnsembleAggregation::PerRealization ? "per_realization"
                                                                                        : "averaged_population") +
                               ", realizations " + std::to_string(cfg.n_realizations) + ", base seed " +
                               std::to_string(cfg.seed));
    summary.columns = {"sigma (relative)",          "median_peak_fi (per parameter unit squared)",
                       "q1_peak_fi (per parameter unit squared)", "q3_peak_fi (per parameter unit squared)",
                       "log10_median_peak_fi (log10)", "median_peak_location (parameter unit)",
                       "peak_location_iqr (parameter unit)"};
    Dataset per;
    per.comments = summary.comments;
    per.columns = {"sigma (relative)", "realization (index)", "seed (integer)",
                   "peak_fi (per parameter unit squared)", "log10_peak_fi (log10)",
                   "peak_location (parameter unit)"};

    json jsig = json::array();
    Series med, lo, hi;
    med.label = "median";
    lo.label = "q1";
    hi.label = "q3";
    for (const auto& s : res.per_sigma) {
        summary.add_row({s.sigma, s.median_peak_fi, s.q1_peak_fi, s.q3_peak_fi, std::log10(s.median_peak_fi),
                         s.median_location, s.location_iqr});
        for (std::size_t r = 0; r < s.peak_fi.size(); ++r) {
            per.add_row({s.sigma, static_cast<std::int64_t>(r + 1), std::to_string(s.seeds.at(r)), s.peak_fi[r],
                         std::log10(s.peak_fi[r]), s.peak_location[r]});
        }
        med.x.push_back(s.sigma);
        lo.x.push_back(s.sigma);
        hi.x.push_back(s.sigma);
        med.y.push_back(s.median_peak_fi);
        lo.y.push_back(s.q1_peak_fi);
        hi.y.push_back(s.q3_peak_fi);
        jsig.push_back({{"sigma", s.sigma},
                        {"median_peak_fi", s.median_peak_fi},
                        {"q1_peak_fi", s.q1_peak_fi},
                        {"q3_peak_fi", s.q3_peak_fi},
                        {"median_location", s.median_location},
                        {"location_iqr", s.location_iqr}});
    }
    out.artifacts.push_back(csv_artifact(cfg.name + "_ensemble.csv", summary));
    out.artifacts.push_back(csv_artifact(cfg.name + "_realizations.csv", per));

    LinePlot plot;
    plot.title = "Peak Fisher information versus disorder";
    plot.x_label = "sigma";
    plot.y_label = "peak Fisher information";
    plot.log_y = true;
    plot.series = {med, lo, hi};
    out.artifacts.push_back(svg_artifact(cfg.name + "_ensemble.svg", render_svg(plot)));

    for (std::size_t r = 0; r < cfg.n_realizations; ++r) out.seeds.push_back(derive_seed(cfg.seed, r));
    out.summary = {{"per_sigma", jsig}};
}

void run_two_atom(const ExperimentConfig& cfg, const Setup& setup, ExperimentOutput& out) {
    struct Draw {
        double w1, w2, w, m, ka, kb;
    };
    std::vector<Draw> draws;
    const auto& t = cfg.two_atom;
    draws.push_back({t.omega1, t.omega2, t.omega, t.m, t.kappa_a, t.kappa_b});
    const std::uint64_t os = derive_seed(cfg.seed, kOracleStream);
    std::mt19937_64 rng(os);
    std::uniform_real_distribution<double> freq(-1.0, 1.0), coup(0.0, 1.0);
    for (std::size_t i = 0; i < t.random_draws; ++i) {
        Draw d{};
        d.w1 = freq(rng);
        d.w2 = freq(rng);
        d.w = freq(rng);
        d.m = freq(rng);
        d.ka = coup(rng);
        d.kb = coup(rng);
        draws.push_back(d);
    }
    if (t.random_draws > 0) out.seeds.push_back(os);

    Dataset d;
    d.comments = base_comments(cfg, setup);
    d.columns = {"omega1 (gamma)", "omega2 (gamma)", "omega (gamma)", "M (gamma)", "kappa_a (gamma)",
                 "kappa_b (gamma)", "root_1 (gamma)", "root_2 (gamma)", "root_3 (gamma)", "eig_1 (gamma)",
                 "eig_2 (gamma)", "eig_3 (gamma)", "max_abs_diff (gamma)"};
    double worst = 0.0;
    for (const auto& x : draws) {
        const auto roots = two_atom_eigenvalues(x.w1, x.w2, x.w, x.m, x.ka, x.kb);
        Eigen::Matrix3d h;
        h << x.w1, x.m, x.ka, x.m, x.w2, x.kb, x.ka, x.kb, x.w;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h, Eigen::EigenvaluesOnly);
        const Eigen::Vector3d e = es.eigenvalues();
        double diff = 0.0;
        for (int k = 0; k < 3; ++k) diff = std::max(diff, std::abs(roots[static_cast<std::size_t>(k)] - e(k)));
        worst = std::max(worst, diff);
        d.add_row({x.w1, x.w2, x.w, x.m, x.ka, x.kb, roots[0], roots[1], roots[2], e(0), e(1), e(2), diff});
    }
    out.artifacts.push_back(csv_artifact(cfg.name + "_two_atom.csv", d));
    out.summary = {{"rows", draws.size()}, {"max_abs_diff", worst}};
}

}  // namespace

std::string library_version() { return CHAINQED_VERSION; }

SweepContext experiment_context(const ExperimentConfig& cfg, std::vector<std::uint64_t>* seeds) {
    SweepContext ctx;
    std::vector<std::uint64_t> used;
    ctx.orientation = cfg.orientation;
    ctx.params = cfg.params;
    if (cfg.kappa_sigma > 0.0) {
        const std::uint64_t ks = derive_seed(cfg.seed, kKappaStream);
        ctx.params = perturb_couplings(cfg.params, cfg.kappa_sigma, ks);
        used.push_back(ks);
    }
    ChainGeometrySpec g = cfg.geometry;
    if (cfg.channel == DisorderChannel::BondNoise) {
        g.disorder_sigma = 0.0;
        ctx.bond_scale = sample_bond_noise(g.n_atoms - 1, cfg.geometry.disorder_sigma, cfg.seed);
    }
    ctx.chain = sample_chain(g, cfg.seed);
    if (cfg.geometry.disorder_sigma > 0.0) used.push_back(cfg.seed);
    if (seeds) seeds->insert(seeds->end(), used.begin(), used.end());
    return ctx;
}

std::string config_digest(const ExperimentConfig& cfg) {
    json j = cfg.to_json();
    j.erase("output_dir");
    j.erase("threads");
    j.erase("plots");
    return sha256_hex(j.dump());
}

ExperimentOutput compute_experiment(const ExperimentConfig& cfg) {
    const Setup setup = make_setup(cfg);
    ExperimentOutput out;
    out.seeds = setup.seeds;
    try {
        switch (cfg.kind) {
            case ExperimentKind::Spectrum: run_spectrum(cfg, setup, out); break;
            case ExperimentKind::TrappingSweep: run_trapping(cfg, setup, out); break;
            case ExperimentKind::Snapshots: run_snapshots(cfg, setup, out); break;
            case ExperimentKind::FisherSweep: run_fisher(cfg, setup, out); break;
            case ExperimentKind::DisorderEnsemble: run_ensemble(cfg, setup, out); break;
            case ExperimentKind::TwoAtomOracle: run_two_atom(cfg, setup, out); break;
        }
    } catch (const NumericalError& e) {
        throw NumericalError("experiment '" + cfg.name + "' (" + to_string(cfg.kind) + "): " + e.what());
    }
    return out;
}

json RunManifest::to_json() const {
    json files_json = json::array();
    for (const auto& f : files) files_json.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return {{"config", config},
            {"config_sha256", config_sha256},
            {"version", version},
            {"seed", seed},
            {"derived_seeds", derived_seeds},
            {"wall_clock_seconds", wall_seconds},
            {"files", files_json},
            {"summary", summary},
            {"disorder_semantics", disorder_semantics}};
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentOutput result = compute_experiment(cfg);

    RunManifest m;
    m.config = cfg.to_json();
    m.config_sha256 = config_digest(cfg);
    m.version = library_version();
    m.seed = cfg.seed;
    m.derived_seeds = result.seeds;
    m.summary = result.summary;
    m.disorder_semantics =
        cfg.geometry.reference == DisorderReference::Spacing
            ? "positions x_j = d (j + xi_j), xi_j ~ Normal(0, disorder_sigma), sorted, resampled below "
              "min_separation; nearest-neighbour couplings scale as M (d / R_j)^3"
            : "positions x_j = j d (1 + xi_j), xi_j ~ Normal(0, disorder_sigma), sorted, resampled below "
              "min_separation; nearest-neighbour couplings scale as M (d / R_j)^3";
    if (cfg.channel == DisorderChannel::BondNoise)
        m.disorder_semantics = "ordered positions; nearest-neighbour bond b carries M (1 + xi_b), xi_b ~ Normal(0, "
                               "disorder_sigma)";

    const std::filesystem::path dir(cfg.output_dir);
    for (const auto& a : result.artifacts) {
        if (a.is_plot && !cfg.plots) continue;
        const std::string path = (dir / a.file).string();
        write_file(path, a.content);
        m.files.push_back({path, sha256_hex(a.content), a.content.size()});
    }
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m.manifest_path = (dir / (cfg.name + "_manifest.json")).string();
    write_file(m.manifest_path, m.to_json().dump(2) + "\n");
    return m;
}

}  // namespace chainqed

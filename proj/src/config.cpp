#include "chainqed/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace chainqed {

using nlohmann::json;

namespace {

// Typed access to one JSON object that remembers which keys were consumed,
// so unknown (usually misspelled) keys can be rejected with their path.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail("", "expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return node_.at(key);
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) fail(key, "expected a number");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) fail(key, "expected true or false");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0))
                    fail(key, "expected a non-negative integer");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) fail(key, "expected a string");
            }
            return v.get<T>();
        } catch (const json::exception& e) {
            fail(key, e.what());
        }
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_array()) fail(key, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) fail(key, "expected an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    Section child(const std::string& key) {
        static const json empty = json::object();
        if (!has(key)) return Section(empty, join(key));
        return Section(raw(key), join(key));
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!used_.count(key)) fail(key, "unknown key");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        throw ConfigError("config field '" + join(key) + "': " + why);
    }

private:
    std::string join(const std::string& key) const {
        if (key.empty()) return path_.empty() ? "<root>" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    const json& node_;
    std::string path_;
    std::set<std::string> used_;
};

template <typename E>
E enum_value(Section& s, const std::string& key, E fallback, std::initializer_list<std::pair<const char*, E>> names) {
    if (!s.has(key)) return fallback;
    const std::string v = s.get<std::string>(key, "");
    for (const auto& [name, value] : names) {
        if (v == name) return value;
    }
    std::string allowed;
    for (const auto& [name, value] : names) allowed += std::string(allowed.empty() ? "" : ", ") + name;
    s.fail(key, "'" + v + "' is not one of: " + allowed);
}

const std::initializer_list<std::pair<const char*, ExperimentKind>> kKinds{
    {"spectrum", ExperimentKind::Spectrum},
    {"trapping_sweep", ExperimentKind::TrappingSweep},
    {"snapshots", ExperimentKind::Snapshots},
    {"fisher_sweep", ExperimentKind::FisherSweep},
    {"disorder_ensemble", ExperimentKind::DisorderEnsemble},
    {"two_atom_oracle", ExperimentKind::TwoAtomOracle},
};

const char* axis_name(SweepKind k) { return k == SweepKind::CouplingM ? "coupling_m" : "spacing_k0r"; }

bool is_linspace(const SweepAxis& axis) {
    const SweepAxis ref = SweepAxis::linspace(axis.kind, axis.grid.front(), axis.grid.back(), axis.grid.size());
    return ref.grid == axis.grid;
}

template <typename Fn>
void wrap_invalid(Fn&& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    for (const auto& [name, value] : kKinds) {
        if (value == kind) return name;
    }
    return "unknown";
}

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig cfg;
    Section root(doc, "");

    cfg.kind = enum_value(root, "experiment", ExperimentKind::Spectrum, kKinds);
    cfg.name = root.get<std::string>("name", to_string(cfg.kind));
    cfg.seed = root.get<std::uint64_t>("seed", 0);
    cfg.horizon = root.get<double>("horizon", 1e4);
    const auto site = root.get<std::size_t>("site", 1);
    const auto initial_site = root.get<std::size_t>("initial_site", 1);
    cfg.normalize = root.get<bool>("normalize", false);
    cfg.plots = root.get<bool>("plots", true);
    cfg.threads = root.get<std::size_t>("threads", 1);
    cfg.output_dir = root.get<std::string>("output_dir", "out/" + cfg.name);

    {
        Section g = root.child("geometry");
        cfg.geometry.n_atoms = g.get<std::size_t>("n_atoms", 8);
        cfg.geometry.nominal_spacing = g.get<double>("spacing", 1.0);
        cfg.geometry.disorder_sigma = g.get<double>("disorder_sigma", 0.0);
        cfg.geometry.min_separation = g.get<double>("min_separation", 1e-2);
        cfg.geometry.max_attempts = g.get<std::size_t>("max_attempts", 10000);
        cfg.geometry.reference = enum_value(g, "reference", DisorderReference::Spacing,
                                            {{"spacing", DisorderReference::Spacing},
                                             {"position", DisorderReference::Position}});
        cfg.channel = enum_value(g, "channel", DisorderChannel::Positional,
                                 {{"positional", DisorderChannel::Positional},
                                  {"bond_noise", DisorderChannel::BondNoise}});
        g.finish();
    }

    {
        Section s = root.child("system");
        const double detuning = s.get<double>("detuning", 0.2);
        cfg.params.omega0 = s.get<double>("omega0", 0.0);
        cfg.params.omega = cfg.params.omega0 + detuning;
        cfg.params.gamma = s.get<double>("gamma", 1.0);
        if (s.has("kappa") && s.raw("kappa").is_array()) {
            cfg.params.kappa = s.numbers("kappa", {});
            if (cfg.params.kappa.size() != cfg.geometry.n_atoms)
                s.fail("kappa", "needs one entry per atom (" + std::to_string(cfg.geometry.n_atoms) + ")");
        } else {
            cfg.params.kappa.assign(cfg.geometry.n_atoms, s.get<double>("kappa", 0.2));
        }
        cfg.kappa_sigma = s.get<double>("kappa_sigma", 0.0);
        cfg.params.dissipation = enum_value(s, "dissipation", DissipationMode::None,
                                            {{"none", DissipationMode::None},
                                             {"collective", DissipationMode::Collective}});
        if (s.has("orientation")) {
            const json& o = s.raw("orientation");
            if (o.is_number()) {
                cfg.orientation.theta = o.get<double>();
            } else if (o == "pi") {
                cfg.orientation = DipoleOrientation::pi();
            } else if (o == "sigma") {
                cfg.orientation = DipoleOrientation::sigma();
            } else {
                s.fail("orientation", "expected \"pi\", \"sigma\" or an angle in radians");
            }
        }
        s.finish();
    }

    {
        Section a = root.child("axis");
        const SweepKind kind = enum_value(a, "kind", SweepKind::CouplingM,
                                          {{"coupling_m", SweepKind::CouplingM},
                                           {"spacing_k0r", SweepKind::SpacingK0R}});
        const bool nn = kind == SweepKind::CouplingM;
        if (a.has("values")) {
            if (a.has("min") || a.has("max") || a.has("points"))
                a.fail("values", "give either values or min/max/points, not both");
            cfg.axis.kind = kind;
            cfg.axis.grid = a.numbers("values", {});
        } else {
            const double lo = a.get<double>("min", nn ? 0.0 : 0.5);
            const double hi = a.get<double>("max", nn ? 0.5 : 6.0);
            const auto points = a.get<std::size_t>("points", nn ? 501 : 1101);
            wrap_invalid([&] { cfg.axis = SweepAxis::linspace(kind, lo, hi, points); });
        }
        a.finish();
    }

    {
        Section c = root.child("crossings");
        if (c.has("tau_cross")) cfg.crossings.tau_cross = c.get<double>("tau_cross", 0.0);
        if (c.has("tau_refine")) cfg.crossings.tau_refine = c.get<double>("tau_refine", 0.0);
        c.finish();
    }

    {
        Section f = root.child("fisher");
        cfg.derivative.relative_step = f.get<double>("relative_step", cfg.derivative.relative_step);
        cfg.derivative.min_step = f.get<double>("min_step", cfg.derivative.min_step);
        cfg.derivative.agreement = f.get<double>("agreement", cfg.derivative.agreement);
        cfg.derivative.max_halvings = f.get<std::size_t>("max_halvings", cfg.derivative.max_halvings);
        cfg.derivative.probability_floor = f.get<double>("probability_floor", cfg.derivative.probability_floor);
        f.finish();
    }

    {
        Section e = root.child("ensemble");
        cfg.sigma_grid = e.numbers("sigma_grid", cfg.sigma_grid);
        cfg.n_realizations = e.get<std::size_t>("n_realizations", cfg.n_realizations);
        cfg.aggregation = enum_value(e, "aggregation", EnsembleAggregation::PerRealization,
                                     {{"per_realization", EnsembleAggregation::PerRealization},
                                      {"averaged_population", EnsembleAggregation::AveragedPopulation}});
        e.finish();
    }

    {
        Section s = root.child("snapshots");
        cfg.snapshots.parameters = s.numbers("parameters", {});
        cfg.snapshots.at_crossings = s.get<bool>("at_crossings", true);
        cfg.snapshots.t_max = s.get<double>("t_max", cfg.snapshots.t_max);
        cfg.snapshots.t_points = s.get<std::size_t>("t_points", cfg.snapshots.t_points);
        cfg.snapshots.k0_phase = s.get<double>("k0_phase", cfg.snapshots.k0_phase);
        s.finish();
    }

    {
        Section t = root.child("two_atom");
        auto& ta = cfg.two_atom;
        ta.omega1 = t.get<double>("omega1", ta.omega1);
        ta.omega2 = t.get<double>("omega2", ta.omega2);
        ta.omega = t.get<double>("omega", ta.omega);
        ta.m = t.get<double>("m", ta.m);
        ta.kappa_a = t.get<double>("kappa_a", ta.kappa_a);
        ta.kappa_b = t.get<double>("kappa_b", ta.kappa_b);
        ta.random_draws = t.get<std::size_t>("random_draws", ta.random_draws);
        t.finish();
    }
    root.finish();

    // Cross-field checks.
    wrap_invalid([&] {
        cfg.geometry.validate();
        cfg.params.validate();
        cfg.orientation.validate();
        cfg.axis.validate();
    });
    const std::size_t n = cfg.geometry.n_atoms;
    if (site < 1 || site > n) root.fail("site", "must lie in 1.." + std::to_string(n));
    if (initial_site < 1 || initial_site > n) root.fail("initial_site", "must lie in 1.." + std::to_string(n));
    cfg.site = site - 1;
    cfg.initial_site = initial_site - 1;
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) root.fail("horizon", "must be positive");
    if (cfg.threads < 1) root.fail("threads", "must be >= 1");
    if (cfg.name.empty() || cfg.name.find('/') != std::string::npos) root.fail("name", "must be a plain file stem");
    if (!(cfg.kappa_sigma >= 0.0)) root.fail("system.kappa_sigma", "must be >= 0");
    if (cfg.channel == DisorderChannel::BondNoise && cfg.axis.kind != SweepKind::CouplingM)
        root.fail("geometry.channel", "bond_noise requires a coupling_m axis");
    if (cfg.crossings.tau_cross && !(*cfg.crossings.tau_cross > 0.0))
        root.fail("crossings.tau_cross", "must be positive");
    if (cfg.crossings.tau_refine && !(*cfg.crossings.tau_refine > 0.0))
        root.fail("crossings.tau_refine", "must be positive");
    if (!(cfg.derivative.relative_step > 0.0) || !(cfg.derivative.min_step > 0.0))
        root.fail("fisher", "derivative steps must be positive");
    if (cfg.sigma_grid.empty()) root.fail("ensemble.sigma_grid", "must not be empty");
    for (double s : cfg.sigma_grid) {
        if (!(s >= 0.0)) root.fail("ensemble.sigma_grid", "entries must be >= 0");
    }
    if (cfg.n_realizations < 1) root.fail("ensemble.n_realizations", "must be >= 1");
    if (!(cfg.snapshots.t_max > 0.0)) root.fail("snapshots.t_max", "must be positive");
    if (cfg.snapshots.t_points < 2) root.fail("snapshots.t_points", "must be >= 2");
    if (cfg.kind == ExperimentKind::Snapshots && cfg.snapshots.parameters.empty() && !cfg.snapshots.at_crossings)
        root.fail("snapshots", "give parameters or enable at_crossings");
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

json ExperimentConfig::to_json() const {
    json j;
    j["experiment"] = to_string(kind);
    j["name"] = name;
    j["seed"] = seed;
    j["horizon"] = horizon;
    j["site"] = site + 1;
    j["initial_site"] = initial_site + 1;
    j["normalize"] = normalize;
    j["plots"] = plots;
    j["threads"] = threads;
    j["output_dir"] = output_dir;

    j["geometry"] = {
        {"n_atoms", geometry.n_atoms},
        {"spacing", geometry.nominal_spacing},
        {"disorder_sigma", geometry.disorder_sigma},
        {"min_separation", geometry.min_separation},
        {"max_attempts", geometry.max_attempts},
        {"reference", geometry.reference == DisorderReference::Spacing ? "spacing" : "position"},
        {"channel", channel == DisorderChannel::Positional ? "positional" : "bond_noise"},
    };

    json sys;
    sys["detuning"] = params.omega - params.omega0;
    sys["omega0"] = params.omega0;
    sys["gamma"] = params.gamma;
    const bool uniform_kappa = std::all_of(params.kappa.begin(), params.kappa.end(),
                                           [&](double k) { return k == params.kappa.front(); });
    if (uniform_kappa) {
        sys["kappa"] = params.kappa.front();
    } else {
        sys["kappa"] = params.kappa;
    }
    sys["kappa_sigma"] = kappa_sigma;
    sys["dissipation"] = params.dissipation == DissipationMode::None ? "none" : "collective";
    sys["orientation"] = orientation.theta;
    j["system"] = sys;

    json ax;
    ax["kind"] = axis_name(axis.kind);
    if (is_linspace(axis)) {
        ax["min"] = axis.grid.front();
        ax["max"] = axis.grid.back();
        ax["points"] = axis.grid.size();
    } else {
        ax["values"] = axis.grid;
    }
    j["axis"] = ax;

    json cr = json::object();
    if (crossings.tau_cross) cr["tau_cross"] = *crossings.tau_cross;
    if (crossings.tau_refine) cr["tau_refine"] = *crossings.tau_refine;
    j["crossings"] = cr;

    j["fisher"] = {
        {"relative_step", derivative.relative_step},
        {"min_step", derivative.min_step},
        {"agreement", derivative.agreement},
        {"max_halvings", derivative.max_halvings},
        {"probability_floor", derivative.probability_floor},
    };
    j["ensemble"] = {
        {"sigma_grid", sigma_grid},
        {"n_realizations", n_realizations},
        {"aggregation",
         aggregation == EnsembleAggregation::PerRealization ? "per_realization" : "averaged_population"},
    };
    j["snapshots"] = {
        {"parameters", snapshots.parameters},
        {"at_crossings", snapshots.at_crossings},
        {"t_max", snapshots.t_max},
        {"t_points", snapshots.t_points},
        {"k0_phase", snapshots.k0_phase},
    };
    j["two_atom"] = {
        {"omega1", two_atom.omega1}, {"omega2", two_atom.omega2}, {"omega", two_atom.omega},
        {"m", two_atom.m},           {"kappa_a", two_atom.kappa_a}, {"kappa_b", two_atom.kappa_b},
        {"random_draws", two_atom.random_draws},
    };
    return j;
}

}  // namespace chainqed

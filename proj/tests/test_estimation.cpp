#include <doctest.h>

#include "chainqed/common.hpp"
#include "chainqed/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace chainqed;

namespace {

// P_bar_1 of a resonant atom and mode with coupling theta.
PopulationModel rabi_model(double horizon) {
    return [horizon](double kappa) {
        const auto params = SystemParams::uniform(1, 0.0, kappa);
        const auto se = build_self_energy(ChainRealization::ordered(1, 1.0), DipoleOrientation::pi(),
                                          NearestNeighbor{0.0, std::nullopt}, params);
        return time_averaged_population(build_hamiltonian(se, params), AmplitudeState::site_excitation(1, 0), 0,
                                        horizon);
    };
}

// d/dkappa of 1/2 + sin(2 kappa T) / (4 kappa T).
double rabi_derivative(double kappa, double T) {
    return std::cos(2 * kappa * T) / (2 * kappa) - std::sin(2 * kappa * T) / (4 * kappa * kappa * T);
}

SweepContext nn_context(double kappa) {
    return SweepContext{ChainRealization::ordered(8, 1.0), SystemParams::uniform(8, 0.2, kappa),
                        DipoleOrientation::pi(), std::nullopt};
}

}  // namespace

TEST_CASE("two-outcome sum equals the closed form") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> p(0.0, 1.0);
    std::normal_distribution<double> d(0.0, 10.0);
    for (int i = 0; i < 10000; ++i) {
        const double pi = p(rng);
        const double di = d(rng);
        const double a = fisher_from_derivative(di, pi);
        const double b = fisher_two_outcome_sum(di, pi);
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
        CHECK(a >= 0.0);
    }
    // Clamped at the edges instead of dividing by zero.
    CHECK(std::isfinite(fisher_from_derivative(1.0, 0.0)));
    CHECK(std::isfinite(fisher_from_derivative(1.0, 1.0)));
    CHECK(fisher_from_derivative(0.0, 0.0) == 0.0);
}

TEST_CASE("constant model carries no information") {
    const PopulationModel flat = [](double) { return 0.3; };
    const auto pt = fisher_point(flat, 0.2);
    CHECK(pt.derivative == 0.0);
    CHECK(pt.fi == 0.0);
    CHECK(pt.smooth);
}

TEST_CASE("derivative of a smooth model is accurate") {
    const PopulationModel f = [](double x) { return 0.5 + 0.25 * std::sin(3.0 * x); };
    for (double x : {0.1, 0.7, 1.9}) {
        const auto pt = fisher_point(f, x);
        CHECK(std::abs(pt.derivative - 0.75 * std::cos(3.0 * x)) < 1e-8);
    }
}

TEST_CASE("Rabi-model Fisher information matches the analytic oracle") {
    const double T = 100.0;
    const auto model = rabi_model(T);
    for (double kappa : {0.05, 0.11, 0.3, 0.57}) {
        const double p = 0.5 + std::sin(2 * kappa * T) / (4 * kappa * T);
        const double d = rabi_derivative(kappa, T);
        const double expected = d * d / (p * (1 - p));
        const double got = fisher_information(model, kappa);
        CHECK(std::abs(got - expected) <= 1e-4 * expected);
    }
}

// Stated property for a decoupled photon. At finite T the oscillating terms
// of P_bar give dP_bar/dM ~ cos(a M T) / M, so the curve is ripple rather
// than flat; this case is registered separately so its outcome stays visible.
TEST_CASE("decoupled photon leaves the Fisher curve featureless") {
    const auto model = population_model(nn_context(0.0), SweepKind::CouplingM, 0, 1e4);
    const auto curve = fisher_sweep(model, SweepAxis::linspace(SweepKind::CouplingM, 0.05, 0.5, 91));
    std::vector<double> fi = curve.fi;
    const double median = quantile(fi, 0.5);
    CHECK(curve.peak_fi <= 10.0 * median);
}

// The Fisher information vanishes on top of the trapping bump (zero slope) and
// peaks on its flanks, about half a resonance width 1/(T |slope difference|)
// away from the crossing itself.
TEST_CASE("Fisher peak sits at the spectral crossing of the ordered chain") {
    const auto ctx = nn_context(0.2);
    const auto report =
        detect_crossings(eigen_sweep(ctx, SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 501)));
    const auto model = population_model(ctx, SweepKind::CouplingM, 0, 1e4);
    const auto axis = SweepAxis::linspace(SweepKind::CouplingM, 0.24, 0.28, 401);
    const auto curve = fisher_sweep(model, axis);
    bool near = false;
    for (const auto& ev : report.events) {
        if (ev.kind == CrossingKind::Crossing && std::abs(ev.parameter - curve.peak_parameter) <= 1e-3) {
            near = true;
        }
    }
    CHECK(near);
    CHECK(curve.peak_resolution <= axis.step());
}

TEST_CASE("long-range chain shows several Fisher peaks") {
    SweepContext ctx{ChainRealization::ordered(8, 1.0), SystemParams::uniform(8, 0.2, 0.2), DipoleOrientation::pi(),
                     std::nullopt};
    const auto model = population_model(ctx, SweepKind::SpacingK0R, 0, 1e4);
    const auto curve = fisher_sweep(model, SweepAxis::linspace(SweepKind::SpacingK0R, 1.0, 6.0, 1001));
    const double median = quantile(curve.fi, 0.5);
    std::size_t peaks = 0;
    for (std::size_t i = 1; i + 1 < curve.fi.size(); ++i) {
        if (curve.fi[i] > curve.fi[i - 1] && curve.fi[i] >= curve.fi[i + 1] && curve.fi[i] > 10.0 * median) ++peaks;
    }
    CHECK(peaks >= 2);
}

TEST_CASE("strong positional disorder removes the crossing and its Fisher peak") {
    ChainGeometrySpec spec;
    spec.disorder_sigma = 0.4;
    const auto axis = SweepAxis::linspace(SweepKind::CouplingM, 0.05, 0.5, 451);
    const SweepContext ordered{ChainRealization::ordered(8, 1.0), SystemParams::uniform(8, 0.2, 0.2),
                               DipoleOrientation::pi(), std::nullopt};
    const SweepContext disordered{sample_chain(spec, 1), ordered.params, ordered.orientation, std::nullopt};
    const auto report = detect_crossings(eigen_sweep(disordered, SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 501)));
    CHECK(report.count(CrossingKind::Crossing) == 0);
    CHECK(report.count(CrossingKind::AvoidedCrossing) >= 1);
    const auto a = fisher_sweep(population_model(ordered, SweepKind::CouplingM, 0, 1e4), axis);
    const auto b = fisher_sweep(population_model(disordered, SweepKind::CouplingM, 0, 1e4), axis);
    CHECK(b.peak_fi <= 0.1 * a.peak_fi);
}

TEST_CASE("threaded Fisher sweep is bit-identical") {
    const auto model = population_model(nn_context(0.2), SweepKind::CouplingM, 0, 1e4);
    const auto axis = SweepAxis::linspace(SweepKind::CouplingM, 0.1, 0.3, 41);
    FisherOptions serial;
    FisherOptions threaded;
    threaded.threads = 3;
    const auto a = fisher_sweep(model, axis, serial);
    const auto b = fisher_sweep(model, axis, threaded);
    CHECK(a.fi == b.fi);
    CHECK(a.peak_parameter == b.peak_parameter);
}

TEST_CASE("ordered ensemble collapses to the ordered curve") {
    ChainGeometrySpec geometry;
    const auto params = SystemParams::uniform(8, 0.2, 0.2);
    const auto axis = SweepAxis::linspace(SweepKind::CouplingM, 0.1, 0.3, 41);
    EnsembleOptions opts;
    opts.sigma_grid = {0.0};
    opts.n_realizations = 3;
    const auto result = disorder_ensemble(geometry, params, DipoleOrientation::pi(), axis, opts);
    REQUIRE(result.per_sigma.size() == 1);
    const auto reference =
        fisher_sweep(population_model(nn_context(0.2), SweepKind::CouplingM, 0, 1e4), axis, opts.fisher);
    for (double v : result.per_sigma[0].peak_fi) CHECK(v == reference.peak_fi);
    CHECK(result.per_sigma[0].median_peak_fi == reference.peak_fi);
}

TEST_CASE("disorder ensemble is reproducible and shares seeds across sigma") {
    ChainGeometrySpec geometry;
    const auto params = SystemParams::uniform(8, 0.2, 0.2);
    const auto axis = SweepAxis::linspace(SweepKind::CouplingM, 0.05, 0.5, 46);
    EnsembleOptions opts;
    opts.sigma_grid = {0.1, 0.3};
    opts.n_realizations = 4;
    opts.base_seed = 99;
    const auto a = disorder_ensemble(geometry, params, DipoleOrientation::pi(), axis, opts);
    opts.fisher.threads = 2;
    const auto b = disorder_ensemble(geometry, params, DipoleOrientation::pi(), axis, opts);
    REQUIRE(a.per_sigma.size() == 2);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(a.per_sigma[s].peak_fi == b.per_sigma[s].peak_fi);
        CHECK(a.per_sigma[s].peak_location == b.per_sigma[s].peak_location);
        for (std::size_t r = 0; r < 4; ++r) CHECK(a.per_sigma[s].seeds[r] == derive_seed(99, r));
    }
    CHECK(a.per_sigma[0].seeds == a.per_sigma[1].seeds);
    CHECK(a.per_sigma[0].q1_peak_fi <= a.per_sigma[0].median_peak_fi);
    CHECK(a.per_sigma[0].median_peak_fi <= a.per_sigma[0].q3_peak_fi);
}

TEST_CASE("bond-noise channel and averaged aggregation") {
    ChainGeometrySpec geometry;
    const auto params = SystemParams::uniform(8, 0.2, 0.2);
    const auto axis = SweepAxis::linspace(SweepKind::CouplingM, 0.05, 0.5, 46);
    EnsembleOptions opts;
    opts.sigma_grid = {0.2};
    opts.n_realizations = 3;
    opts.channel = DisorderChannel::BondNoise;
    opts.aggregation = EnsembleAggregation::AveragedPopulation;
    const auto res = disorder_ensemble(geometry, params, DipoleOrientation::pi(), axis, opts);
    REQUIRE(res.per_sigma.size() == 1);
    CHECK(res.per_sigma[0].peak_fi.size() == 1);
    CHECK(res.per_sigma[0].seeds.size() == 3);
    CHECK(res.channel == DisorderChannel::BondNoise);
}

TEST_CASE("quantile interpolates between order statistics") {
    CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({5.0}, 0.9) == 5.0);
    CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(quantile({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("Cramer-Rao bound") {
    const auto b = cramer_rao_bound(4.0, 1);
    CHECK(b.bound == 0.25);
    CHECK(b.bounded());
    CHECK(cramer_rao_bound(4.0, 5).bound == doctest::Approx(0.05));
    const auto none = cramer_rao_bound(0.0, 1);
    CHECK(none.bound == std::numeric_limits<double>::infinity());
    CHECK_FALSE(none.bounded());
    CHECK_THROWS_AS(cramer_rao_bound(-1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(cramer_rao_bound(1.0, 0), std::invalid_argument);
}

#include "chainqed/estimation.hpp"

#include "chainqed/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace chainqed {

PopulationModel population_model(SweepContext context, SweepKind kind, std::size_t site, double horizon,
                                 std::size_t initial_site) {
    const std::size_t n = context.chain.size();
    if (site >= n || initial_site >= n) throw std::invalid_argument("population_model: site index out of range");
    if (!(horizon > 0.0)) throw std::invalid_argument("population_model: horizon must be positive");
    return [ctx = std::move(context), kind, site, horizon, initial_site, n](double theta) {
        const EffectiveHamiltonian h = ctx.hamiltonian_at(kind, theta);
        return time_averaged_population(h, AmplitudeState::site_excitation(n, initial_site), site, horizon);
    };
}

double fisher_from_derivative(double derivative, double p, double floor) {
    p = std::clamp(p, floor, 1.0 - floor);
    return derivative * derivative / (p * (1.0 - p));
}

double fisher_two_outcome_sum(double derivative, double p, double floor) {
    p = std::clamp(p, floor, 1.0 - floor);
    // Outcome probabilities p and 1 - p have derivatives d and -d.
    const double d2 = derivative * derivative;
    return d2 / p + d2 / (1.0 - p);
}

FisherPoint fisher_point(const PopulationModel& model, double theta, const DerivativeOptions& options) {
    if (!std::isfinite(theta)) throw std::invalid_argument("fisher_information: non-finite parameter");
    if (!(options.relative_step > 0.0) || !(options.min_step > 0.0))
        throw std::invalid_argument("fisher_information: derivative step must be positive");

    auto central = [&](double h) { return (model(theta + h) - model(theta - h)) / (2.0 * h); };

    FisherPoint pt;
    pt.theta = theta;
    pt.pbar = model(theta);

    double h = std::max(options.relative_step * std::abs(theta), options.min_step);
    double d_h = central(h);
    double d_half = central(0.5 * h);
    // Rounding in P_bar is ~1e-13; its image in a difference quotient is the noise floor.
    auto noise = [](double step) { return 1e-12 / step; };
    pt.smooth = false;
    for (std::size_t k = 0;; ++k) {
        if (std::abs(d_h - d_half) <= options.agreement * std::abs(d_half) + noise(0.5 * h)) {
            pt.smooth = true;
            break;
        }
        if (k >= options.max_halvings) break;
        h *= 0.5;
        d_h = d_half;
        d_half = central(0.5 * h);
    }
    double d = (4.0 * d_half - d_h) / 3.0;
    if (std::abs(d) < noise(0.5 * h)) d = 0.0;
    if (!std::isfinite(d) || !std::isfinite(pt.pbar))
        throw NumericalError("fisher_information: non-finite derivative at " + std::to_string(theta));

    pt.derivative = d;
    pt.step = h;
    pt.fi = fisher_from_derivative(d, pt.pbar, options.probability_floor);
    return pt;
}

double fisher_information(const PopulationModel& model, double theta, const DerivativeOptions& options) {
    return fisher_point(model, theta, options).fi;
}

FisherCurve fisher_sweep(const PopulationModel& model, const SweepAxis& axis, const FisherOptions& options) {
    axis.validate();
    const std::size_t n = axis.grid.size();
    std::vector<FisherPoint> points(n);
    parallel_for(n, options.threads,
                 [&](std::size_t i) { points[i] = fisher_point(model, axis.grid[i], options.derivative); });

    FisherCurve curve;
    curve.axis = axis;
    curve.site = options.site;
    curve.horizon = options.horizon;
    for (const auto& p : points) {
        curve.pbar.push_back(p.pbar);
        curve.derivative.push_back(p.derivative);
        curve.fi.push_back(p.fi);
        curve.step.push_back(p.step);
        curve.smooth.push_back(p.smooth);
    }

    const auto best = static_cast<std::size_t>(std::max_element(curve.fi.begin(), curve.fi.end()) - curve.fi.begin());
    curve.peak_parameter = axis.grid[best];
    curve.peak_fi = curve.fi[best];
    curve.peak_resolution = axis.step();
    if (!options.refine_peak) return curve;

    // Resample the two cells around the grid maximum ten times finer.
    const double lo = axis.grid[best == 0 ? 0 : best - 1];
    const double hi = axis.grid[std::min(best + 1, n - 1)];
    const double fine = axis.step() / 10.0;
    const auto m = static_cast<std::size_t>(std::ceil((hi - lo) / fine - 1e-9)) + 1;
    std::vector<FisherPoint> local(m);
    parallel_for(m, options.threads, [&](std::size_t i) {
        const double x = i + 1 == m ? hi : lo + fine * static_cast<double>(i);
        local[i] = fisher_point(model, x, options.derivative);
    });
    for (const auto& p : local) {
        if (p.fi > curve.peak_fi) {
            curve.peak_fi = p.fi;
            curve.peak_parameter = p.theta;
        }
    }
    curve.peak_resolution = fine;
    return curve;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DisorderEnsembleResult disorder_ensemble(const ChainGeometrySpec& geometry, const SystemParams& params,
                                         DipoleOrientation orientation, const SweepAxis& axis,
                                         const EnsembleOptions& options) {
    geometry.validate();
    params.validate();
    axis.validate();
    if (options.n_realizations < 1) throw std::invalid_argument("disorder_ensemble: n_realizations must be >= 1");
    if (options.sigma_grid.empty()) throw std::invalid_argument("disorder_ensemble: empty sigma grid");
    for (double s : options.sigma_grid) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("disorder_ensemble: sigma must be >= 0");
    }
    if (options.channel == DisorderChannel::BondNoise && axis.kind != SweepKind::CouplingM)
        throw std::invalid_argument("disorder_ensemble: bond noise applies to nearest-neighbour sweeps only");

    const std::size_t nr = options.n_realizations;
    std::vector<std::uint64_t> seeds(nr);
    for (std::size_t r = 0; r < nr; ++r) seeds[r] = derive_seed(options.base_seed, r);

    auto context_for = [&](double sigma, std::uint64_t seed) {
        SweepContext ctx;
        ctx.params = params;
        ctx.orientation = orientation;
        if (options.channel == DisorderChannel::Positional) {
            ChainGeometrySpec g = geometry;
            g.disorder_sigma = sigma;
            ctx.chain = sample_chain(g, seed);
        } else {
            ChainGeometrySpec g = geometry;
            g.disorder_sigma = 0.0;
            ctx.chain = sample_chain(g, seed);
            ctx.bond_scale = sample_bond_noise(g.n_atoms - 1, sigma, seed);
        }
        return ctx;
    };

    FisherOptions serial = options.fisher;
    serial.threads = 1;

    DisorderEnsembleResult result;
    result.n_realizations = nr;
    result.base_seed = options.base_seed;
    result.aggregation = options.aggregation;
    result.channel = options.channel;

    for (double sigma : options.sigma_grid) {
        EnsembleSummary s;
        s.sigma = sigma;
        s.seeds = seeds;
        std::vector<FisherCurve> curves;

        if (options.aggregation == EnsembleAggregation::PerRealization) {
            // At sigma = 0 every seed yields the ordered chain; compute it once.
            const std::size_t distinct = sigma == 0.0 ? 1 : nr;
            curves.resize(distinct);
            parallel_for(distinct, options.fisher.threads, [&](std::size_t r) {
                const PopulationModel model = population_model(context_for(sigma, seeds[r]), axis.kind,
                                                               options.fisher.site, options.fisher.horizon,
                                                               options.initial_site);
                curves[r] = fisher_sweep(model, axis, serial);
            });
            if (distinct == 1 && nr > 1) curves.resize(nr, curves.front());
        } else {
            std::vector<PopulationModel> members;
            members.reserve(nr);
            for (std::size_t r = 0; r < nr; ++r) {
                members.push_back(population_model(context_for(sigma, seeds[r]), axis.kind, options.fisher.site,
                                                   options.fisher.horizon, options.initial_site));
            }
            const PopulationModel averaged = [&members](double theta) {
                double sum = 0.0;
                for (const auto& m : members) sum += m(theta);
                return sum / static_cast<double>(members.size());
            };
            curves.push_back(fisher_sweep(averaged, axis, options.fisher));
        }

        for (const auto& c : curves) {
            s.peak_fi.push_back(c.peak_fi);
            s.peak_location.push_back(c.peak_parameter);
        }
        s.median_peak_fi = quantile(s.peak_fi, 0.5);
        s.q1_peak_fi = quantile(s.peak_fi, 0.25);
        s.q3_peak_fi = quantile(s.peak_fi, 0.75);
        s.median_location = quantile(s.peak_location, 0.5);
        s.location_iqr = quantile(s.peak_location, 0.75) - quantile(s.peak_location, 0.25);
        if (options.keep_curves) s.curves = std::move(curves);
        result.per_sigma.push_back(std::move(s));
    }
    return result;
}

bool CramerRaoBound::bounded() const { return std::isfinite(bound); }

CramerRaoBound cramer_rao_bound(double fi, std::size_t n_measurements) {
    if (!(fi >= 0.0) || !std::isfinite(fi)) throw std::invalid_argument("cramer_rao_bound: FI must be finite and >= 0");
    if (n_measurements < 1) throw std::invalid_argument("cramer_rao_bound: need at least one measurement");
    CramerRaoBound b;
    b.fi = fi;
    b.n_measurements = n_measurements;
    b.bound = fi > 0.0 ? 1.0 / (static_cast<double>(n_measurements) * fi)
                       : std::numeric_limits<double>::infinity();
    return b;
}

}  // namespace chainqed

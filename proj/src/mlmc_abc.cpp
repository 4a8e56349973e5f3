#include "mfmlmc/mlmc_abc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfmlmc/error.hpp"
#include "mfmlmc/parallel.hpp"

namespace mfmlmc {

ThresholdSchedule ThresholdSchedule::geometric(double eps1, double epsL, std::size_t L) {
    if (L < 1) throw ConfigError("need at least one level");
    if (L == 1) return {{epsL}};
    ThresholdSchedule s;
    const double m = std::pow(eps1 / epsL, 1.0 / static_cast<double>(L - 1));
    for (std::size_t l = 0; l < L; ++l) s.epsilons.push_back(eps1 * std::pow(m, -static_cast<double>(l)));
    s.epsilons.front() = eps1;
    s.epsilons.back() = epsL;
    s.validate();
    return s;
}

ThresholdSchedule ThresholdSchedule::with_scale(double eps1, double epsL, double m) {
    if (!(m > 1.0)) throw ConfigError("scale factor m must exceed 1");
    if (!(eps1 > epsL)) throw ConfigError("eps1 must exceed epsL");
    ThresholdSchedule s;
    double e = eps1;
    // Stop a hair above epsL so rounding never creates a near-duplicate level.
    while (e > epsL * (1.0 + 1e-9)) {
        s.epsilons.push_back(e);
        e /= m;
    }
    s.epsilons.push_back(epsL);
    s.validate();
    return s;
}

ThresholdSchedule ThresholdSchedule::default_for(double eps1, double epsL) {
    if (!(eps1 > epsL)) return {{epsL}};
    std::size_t L = 2;
    while (std::pow(eps1 / epsL, 1.0 / static_cast<double>(L - 1)) > 2.0) ++L;
    return geometric(eps1, epsL, L);
}

double ThresholdSchedule::scale_factor() const {
    if (epsilons.size() < 2) return 1.0;
    return std::pow(epsilons.front() / epsilons.back(),
                    1.0 / static_cast<double>(epsilons.size() - 1));
}

void ThresholdSchedule::validate() const {
    if (epsilons.empty()) throw ConfigError("threshold schedule is empty");
    for (std::size_t l = 0; l < epsilons.size(); ++l) {
        if (!(epsilons[l] > 0.0)) throw ConfigError("thresholds must be positive");
        if (l > 0 && !(epsilons[l] < epsilons[l - 1])) {
            throw ConfigError("thresholds must be strictly decreasing");
        }
    }
}

std::vector<ParamVector> couple_down(const std::vector<WeightedSample>& samples,
                                     const std::vector<WeightedMarginalCDF>& Fhat_prev) {
    std::vector<ParamVector> out(samples.size());
    if (samples.empty()) return out;
    const std::size_t k = Fhat_prev.size();
    for (auto& t : out) t.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const WeightedMarginalCDF Fbar = build_marginal_cdf(samples, j);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            out[i][j] = Fhat_prev[j].inverse(Fbar.eval(samples[i].theta[j]));
        }
    }
    return out;
}

MultilevelResult combine_levels(std::vector<std::vector<WeightedSample>> level_samples,
                                const TargetFn& f, const std::vector<double>& extra_cost) {
    if (level_samples.empty()) throw ConfigError("no levels to combine");
    MultilevelResult result;
    const std::size_t k = level_samples.front().empty() ? 0 : level_samples.front().front().theta.size();
    std::vector<AccumulatedMarginalCDF> acc(k);

    double estimate = 0.0;
    double variance = 0.0;
    for (std::size_t l = 0; l < level_samples.size(); ++l) {
        const int level = static_cast<int>(l + 1);
        LevelOutput out;
        out.samples = std::move(level_samples[l]);
        const auto& samples = out.samples;
        const std::size_t n = samples.size();

        std::vector<double> weights(n);
        double sum_w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] = samples[i].w;
            sum_w += weights[i];
            out.cost += samples[i].cost;
        }
        if (l < extra_cost.size()) out.cost += extra_cost[l];
        if (!(sum_w > 0.0)) {
            throw DegenerateWeightsError(
                "level " + std::to_string(level) + " weight sum is not positive; draw more samples",
                level);
        }
        out.weight_sum = sum_w;
        const double W = 1.0 / sum_w;

        out.g.resize(n);
        if (l == 0) {
            for (std::size_t i = 0; i < n; ++i) out.g[i] = f(samples[i].theta);
            for (std::size_t i = 0; i < n; ++i) {
                if (weights[i] == 0.0) continue;
                for (std::size_t j = 0; j < k; ++j) acc[j].add(samples[i].theta[j], W * weights[i]);
            }
        } else {
            std::vector<WeightedMarginalCDF> Fhat(k);
            for (std::size_t j = 0; j < k; ++j) Fhat[j] = acc[j].finalize();
            out.coupled = couple_down(samples, Fhat);
            for (std::size_t i = 0; i < n; ++i) {
                out.g[i] = f(samples[i].theta) - f(out.coupled[i]);
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (weights[i] == 0.0) continue;
                const double mass = W * weights[i];
                for (std::size_t j = 0; j < k; ++j) {
                    acc[j].add(samples[i].theta[j], mass);
                    acc[j].add(out.coupled[i][j], -mass);
                }
            }
        }

        const double contribution = weighted_estimate(out.g, weights);
        variance += weighted_estimate_variance(out.g, weights);
        estimate += contribution;
        result.report.per_level.push_back(
            {level, contribution, n, sum_w / static_cast<double>(n), out.cost});
        result.report.total_cost += out.cost;
        result.levels.push_back(std::move(out));
    }
    result.report.estimate = estimate;
    result.report.variance_estimate = variance;
    for (const auto& a : acc) result.cdfs.push_back(a.finalize());
    return result;
}

MultilevelResult mlmc_abc(const ABCProblem& problem, const ThresholdSchedule& schedule,
                          const std::vector<std::size_t>& N, const TargetFn& f,
                          const RngStream& rng, const MLMCOptions& options) {
    schedule.validate();
    if (N.size() != schedule.levels()) throw ConfigError("need one sample count per level");
    // L = 1 is plain rejection, where a single sample is allowed.
    for (std::size_t n : N) {
        if (n < (N.size() == 1 ? 1u : 2u)) throw ConfigError("every level needs N >= 2");
    }

    std::vector<std::vector<WeightedSample>> levels;
    std::vector<double> rejected_cost;
    for (std::size_t l = 0; l < schedule.levels(); ++l) {
        ABCProblem p = problem;
        p.epsilon = schedule.epsilons[l];
        RejectionOptions ro;
        ro.level = static_cast<int>(l + 1);
        ro.max_attempts_per_sample = options.max_attempts_per_sample;
        RejectionResult r = abc_rejection(p, f, N[l], rng, ro);
        double accepted_cost = 0.0;
        for (const auto& s : r.samples) accepted_cost += s.cost;
        rejected_cost.push_back(r.report.total_cost - accepted_cost);
        levels.push_back(std::move(r.samples));
    }
    MultilevelResult result = combine_levels(std::move(levels), f, rejected_cost);
    for (std::size_t l = 0; l < result.levels.size(); ++l) {
        result.levels[l].epsilon = schedule.epsilons[l];
    }
    return result;
}

std::vector<std::size_t> optimal_allocation(const std::vector<LevelStats>& stats, double h,
                                            std::optional<std::size_t> anchor) {
    if (stats.empty()) throw ConfigError("no level statistics");
    if (!anchor && !(h > 0.0)) throw ConfigError("target standard deviation h must be positive");
    double total = 0.0;
    for (std::size_t l = 0; l < stats.size(); ++l) {
        if (!(stats[l].v > 0.0) || !(stats[l].c > 0.0)) {
            throw AllocationError("level " + std::to_string(l + 1) +
                                  " has zero variance or cost; use more trial samples");
        }
        total += std::sqrt(stats[l].v * stats[l].c);
    }
    std::vector<double> raw(stats.size());
    for (std::size_t l = 0; l < stats.size(); ++l) {
        raw[l] = std::sqrt(stats[l].v / stats[l].c) * total / (h > 0.0 ? h * h : 1.0);
    }
    if (anchor) {
        const double scale = static_cast<double>(*anchor) / raw.back();
        for (double& r : raw) r *= scale;
    }
    std::vector<std::size_t> N(stats.size());
    for (std::size_t l = 0; l < stats.size(); ++l) {
        // Guard against ceil(16.000000001) = 17 from rounding noise.
        N[l] = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(raw[l] * (1.0 - 1e-12))));
    }
    return N;
}

namespace {

double sample_variance(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

TrialStats estimate_level_stats(const ABCProblem& problem, const ThresholdSchedule& schedule,
                                std::size_t N0, const TargetFn& f, const RngStream& rng,
                                const MLMCOptions& options) {
    if (N0 < 2) throw ConfigError("trial size N0 must be at least 2");
    const std::vector<std::size_t> N(schedule.levels(), N0);
    const MultilevelResult r = mlmc_abc(problem, schedule, N, f, rng, options);
    TrialStats out;
    for (const auto& level : r.levels) {
        out.stats.push_back({sample_variance(level.g), level.cost / static_cast<double>(N0), 1.0});
    }
    out.total_cost = r.report.total_cost;
    return out;
}

RngStream trial_stream(const RngStream& rng) {
    return rng.derive(0x7472'6961'6cULL, 0, Purpose::kGeneric);
}

MultilevelResult mlmc_abc_tuned(const ABCProblem& problem, const ThresholdSchedule& schedule,
                                std::size_t N0, double h, std::optional<std::size_t> anchor,
                                const TargetFn& f, const RngStream& rng,
                                const MLMCOptions& options) {
    const TrialStats trial =
        estimate_level_stats(problem, schedule, N0, f, trial_stream(rng), options);
    const std::vector<std::size_t> N = optimal_allocation(trial.stats, h, anchor);
    MultilevelResult r = mlmc_abc(problem, schedule, N, f, rng, options);
    r.tuning_cost = trial.total_cost;
    r.report.total_cost += trial.total_cost;
    return r;
}

}  // namespace mfmlmc

#include "mfmlmc/abc.hpp"

#include <cmath>
#include <string>

#include "mfmlmc/error.hpp"
#include "mfmlmc/parallel.hpp"

namespace mfmlmc {

void Prior::validate() const {
    if (lo.size() != hi.size()) throw ConfigError("prior bounds have mismatched lengths");
    if (lo.empty()) throw ConfigError("prior has no dimensions");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] < hi[i])) {
            throw ConfigError("prior dimension " + std::to_string(i) + " needs lo < hi");
        }
    }
}

ParamVector Prior::sample(RngStream& rng) const {
    ParamVector theta(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) theta[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
    return theta;
}

void ABCProblem::validate() const {
    prior.validate();
    obs_model.validate(t0);
    if (prior.dimension() != network.param_count()) {
        throw ConfigError("prior dimension " + std::to_string(prior.dimension()) +
                          " does not match the network's " +
                          std::to_string(network.param_count()) + " free parameters");
    }
    if (data.rows() != obs_model.obs_times.size() ||
        data.cols() != obs_model.observed_indices.size()) {
        throw ConfigError("data dimensions do not match the observation model");
    }
    for (std::size_t idx : obs_model.observed_indices) {
        if (idx >= network.species_count()) throw ConfigError("observed species index out of range");
    }
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

TargetFn component_mean(std::size_t i) {
    return [i](std::span<const double> theta) { return theta[i]; };
}

TargetFn indicator_below(std::size_t i, double s) {
    return [i, s](std::span<const double> theta) { return theta[i] <= s ? 1.0 : 0.0; };
}

double discrepancy(const ObservationSet& data, const ObservationSet& sim, DiscrepancyMetric) {
    if (data.rows() != sim.rows() || data.cols() != sim.cols()) {
        throw ConfigError("discrepancy between observation sets of different shapes");
    }
    double sum = 0.0;
    const auto a = data.values();
    const auto b = sim.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double weighted_estimate(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) throw ConfigError("values and weights differ in length");
    double sw = 0.0;
    double swf = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sw += weights[i];
        swf += weights[i] * values[i];
    }
    if (sw == 0.0) throw DegenerateWeightsError("sum of weights is zero; draw more samples");
    return swf / sw;
}

double weighted_estimate(const std::vector<WeightedSample>& samples, const TargetFn& f) {
    std::vector<double> values, weights;
    values.reserve(samples.size());
    weights.reserve(samples.size());
    for (const auto& s : samples) {
        values.push_back(f(s.theta));
        weights.push_back(s.w);
    }
    return weighted_estimate(values, weights);
}

double weighted_estimate_variance(std::span<const double> values,
                                  std::span<const double> weights) {
    const double mean = weighted_estimate(values, weights);
    double sw = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sw += weights[i];
        const double d = values[i] - mean;
        acc += weights[i] * weights[i] * d * d;
    }
    return acc / (sw * sw);
}

RngStream sample_stream(const RngStream& root, int level, std::uint64_t index, Purpose purpose) {
    return root.derive(static_cast<std::uint64_t>(level), index, purpose);
}

SimulationOutcome simulate_and_compare(const ABCProblem& problem, const ParamVector& theta,
                                       Fidelity fidelity, double epsilon, RngStream& dynamics,
                                       RngStream& observation) {
    const SimulatedData sim = simulate_observations(problem.network, theta, problem.obs_model,
                                                    problem.t0, fidelity, dynamics, observation,
                                                    problem.cost_mode);
    const double rho = discrepancy(problem.data, sim.data, problem.discrepancy);
    return {rho <= epsilon, rho, sim.cost};
}

namespace {

struct Attempt {
    ParamVector theta;
    SimulationOutcome outcome;
};

Attempt run_attempt(const ABCProblem& problem, const RngStream& rng, int level,
                    std::uint64_t index) {
    RngStream prior_rng = sample_stream(rng, level, index, Purpose::kPrior);
    RngStream dyn = sample_stream(rng, level, index, Purpose::kExactDynamics);
    RngStream obs = sample_stream(rng, level, index, Purpose::kExactObservation);
    Attempt a;
    a.theta = problem.prior.sample(prior_rng);
    a.outcome = simulate_and_compare(problem, a.theta, Fidelity::Exact(), problem.epsilon, dyn, obs);
    return a;
}

}  // namespace

RejectionResult abc_rejection(const ABCProblem& problem, const TargetFn& f, std::size_t N,
                              const RngStream& rng, const RejectionOptions& options) {
    if (N < 1) throw ConfigError("rejection sampling needs N >= 1");
    problem.validate();

    // Attempts are evaluated in blocks and scanned in index order; streams
    // are keyed by attempt index, so the accepted set never depends on the
    // worker count.
    constexpr std::size_t kBlock = 64;
    const std::uint64_t cap = options.max_attempts_per_sample * N;

    RejectionResult result;
    result.samples.reserve(N);
    double total_cost = 0.0;
    std::uint64_t next_index = 0;
    std::vector<Attempt> block(kBlock);
    while (result.samples.size() < N) {
        if (next_index >= cap) {
            throw AcceptanceRateError("acceptance rate too low: " +
                                      std::to_string(result.samples.size()) + " of " +
                                      std::to_string(N) + " samples accepted after " +
                                      std::to_string(next_index) + " attempts");
        }
        const std::uint64_t base = next_index;
        // Single-threaded runs go one attempt at a time so nothing is wasted.
        const std::size_t width = thread_count() > 1 ? kBlock : 1;
        parallel_for(width, [&](std::size_t k) {
            block[k] = run_attempt(problem, rng, options.level, base + k);
        });
        for (std::size_t k = 0; k < width && result.samples.size() < N; ++k) {
            const Attempt& a = block[k];
            ++next_index;
            total_cost += a.outcome.cost;
            if (!a.outcome.accept) continue;
            WeightedSample s;
            s.theta = a.theta;
            s.w = 1.0;
            s.cost = a.outcome.cost;
            s.exact_cost = a.outcome.cost;
            s.exact_run = true;
            s.exact_accept = true;
            s.level = options.level;
            s.index = base + k;
            result.samples.push_back(std::move(s));
        }
    }
    result.attempts = next_index;

    std::vector<double> values(N), weights(N, 1.0);
    for (std::size_t i = 0; i < N; ++i) values[i] = f(result.samples[i].theta);
    const double estimate = weighted_estimate(values, weights);
    double ss = 0.0;
    for (double v : values) ss += (v - estimate) * (v - estimate);
    const double sample_var = N > 1 ? ss / static_cast<double>(N - 1) : 0.0;

    result.report.estimate = estimate;
    result.report.variance_estimate = sample_var / static_cast<double>(N);
    result.report.total_cost = total_cost;
    result.report.per_level.push_back(
        {options.level, estimate, N, 1.0, total_cost});
    return result;
}

}  // namespace mfmlmc

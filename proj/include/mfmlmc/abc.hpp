#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfmlmc/reaction_network.hpp"
#include "mfmlmc/rng.hpp"
#include "mfmlmc/simulation.hpp"

namespace mfmlmc {

/// Independent Uniform(lo_i, hi_i) prior.
struct Prior {
    std::vector<double> lo;
    std::vector<double> hi;

    void validate() const;
    [[nodiscard]] std::size_t dimension() const { return lo.size(); }
    [[nodiscard]] ParamVector sample(RngStream& rng) const;
    [[nodiscard]] double mean(std::size_t i) const { return 0.5 * (lo[i] + hi[i]); }
};

enum class DiscrepancyMetric { kEuclidean };

/// Everything that defines an ABC posterior at one threshold.
struct ABCProblem {
    ReactionNetwork network;
    ObservationModel obs_model;
    ObservationSet data;
    Prior prior;
    double epsilon = 0.0;
    DiscrepancyMetric discrepancy = DiscrepancyMetric::kEuclidean;
    double t0 = 0.0;
    CostMode cost_mode = CostMode::kWallClock;

    /// Throws ConfigError on any inconsistency.
    void validate() const;
};

/// Scalar function of theta whose posterior expectation is estimated.
using TargetFn = std::function<double(std::span<const double>)>;

/// f(theta) = theta[i].
TargetFn component_mean(std::size_t i);
/// f(theta) = 1{theta[i] <= s}: the posterior marginal CDF at s.
TargetFn indicator_below(std::size_t i, double s);

/// One prior draw with its (possibly multifidelity) weight.
struct WeightedSample {
    ParamVector theta;
    double w = 0.0;
    double cost = 0.0;
    double approx_cost = 0.0;
    double exact_cost = 0.0;
    bool approx_accept = false;
    bool exact_run = false;
    /// Present iff exact_run.
    std::optional<bool> exact_accept;
    int level = 1;
    std::uint64_t index = 0;
};

struct LevelContribution {
    int level = 1;
    double contribution = 0.0;
    std::size_t sample_count = 0;
    double mean_weight = 0.0;
    double cost = 0.0;
};

/// Result of any estimator; estimate == sum of per-level contributions.
struct EstimatorReport {
    double estimate = 0.0;
    std::vector<LevelContribution> per_level;
    double variance_estimate = 0.0;
    double total_cost = 0.0;
};

/// rho(Y_obs, Y_s) = ||Y_obs - Y_s||_2 over all entries.
double discrepancy(const ObservationSet& data, const ObservationSet& sim,
                   DiscrepancyMetric metric = DiscrepancyMetric::kEuclidean);

/// Self-normalised weighted mean sum(w f) / sum(w).
double weighted_estimate(std::span<const double> values, std::span<const double> weights);
double weighted_estimate(const std::vector<WeightedSample>& samples, const TargetFn& f);

/// Plug-in variance of a self-normalised estimate:
/// sum(w^2 (f - fhat)^2) / (sum w)^2.
double weighted_estimate_variance(std::span<const double> values,
                                  std::span<const double> weights);

/// Outcome of a single simulate-and-compare step.
struct SimulationOutcome {
    bool accept = false;
    double distance = 0.0;
    double cost = 0.0;
};

/// Simulates theta at `fidelity` with the given streams and compares the
/// synthetic observations with the problem data at threshold `epsilon`.
SimulationOutcome simulate_and_compare(const ABCProblem& problem, const ParamVector& theta,
                                       Fidelity fidelity, double epsilon, RngStream& dynamics,
                                       RngStream& observation);

/// Stream for one purpose of sample `index` at `level`, derived from root.
RngStream sample_stream(const RngStream& root, int level, std::uint64_t index, Purpose purpose);

struct RejectionOptions {
    /// Maximum attempts per accepted sample before giving up.
    std::uint64_t max_attempts_per_sample = 10'000'000;
    /// Level tag used for stream derivation and sample bookkeeping.
    int level = 1;
};

struct RejectionResult {
    EstimatorReport report;
    /// Accepted samples, in attempt order, all with w = 1.
    std::vector<WeightedSample> samples;
    std::uint64_t attempts = 0;
};

/// ABC rejection sampling: N accepted prior draws with rho <= epsilon
/// under exact simulation. Cost includes every rejected attempt.
RejectionResult abc_rejection(const ABCProblem& problem, const TargetFn& f, std::size_t N,
                              const RngStream& rng, const RejectionOptions& options = {});

}  // namespace mfmlmc

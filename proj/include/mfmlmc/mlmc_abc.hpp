#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mfmlmc/abc.hpp"
#include "mfmlmc/marginal_cdf.hpp"

namespace mfmlmc {

/// Strictly decreasing ABC thresholds epsilon_1 > ... > epsilon_L.
struct ThresholdSchedule {
    std::vector<double> epsilons;

    /// L thresholds with a constant ratio from eps1 down to epsL.
    static ThresholdSchedule geometric(double eps1, double epsL, std::size_t L);
    /// eps1 m^{-(l-1)} for as long as that stays above epsL, then epsL.
    /// The last ratio may be smaller than m.
    static ThresholdSchedule with_scale(double eps1, double epsL, double m);
    /// Smallest L for which the geometric ratio is at most 2, so it lands in
    /// [1.5, 2] whenever eps1 / epsL >= 1.5.
    static ThresholdSchedule default_for(double eps1, double epsL);

    [[nodiscard]] std::size_t levels() const { return epsilons.size(); }
    /// (eps1 / epsL)^{1/(L-1)}; 1 when L = 1.
    [[nodiscard]] double scale_factor() const;
    /// Throws ConfigError unless non-empty, positive and strictly decreasing.
    void validate() const;
};

/// Inputs of the optimal sample allocation for one level.
struct LevelStats {
    /// Variance of the level correction (per sample, weight-normalised).
    double v = 0.0;
    /// Mean cost per sample.
    double c = 0.0;
    double mean_weight = 1.0;
};

/// Per-level record of a multilevel run.
struct LevelOutput {
    std::vector<WeightedSample> samples;
    /// Coupled partners at the previous level (empty at level 1).
    std::vector<ParamVector> coupled;
    /// g values: f(theta) at level 1, f(theta) - f(coupled) above.
    std::vector<double> g;
    double epsilon = 0.0;
    double weight_sum = 0.0;
    double cost = 0.0;
};

struct MultilevelResult {
    EstimatorReport report;
    std::vector<LevelOutput> levels;
    /// Accumulated marginal CDFs after the last level, one per dimension.
    std::vector<WeightedMarginalCDF> cdfs;
    /// Cost of trial runs used to configure this run (included in
    /// report.total_cost).
    double tuning_cost = 0.0;
};

/// theta~_j = Fhat_prev_j^{-1}(Fbar_j(theta_j)) for every sample, where
/// Fbar is the weighted marginal CDF of `samples` itself.
std::vector<ParamVector> couple_down(const std::vector<WeightedSample>& samples,
                                     const std::vector<WeightedMarginalCDF>& Fhat_prev);

/// Builds the telescoping estimate from per-level weighted sample sets,
/// processing levels in order: level contributions are self-normalised
/// weighted means of g, and the accumulated marginal CDFs gain the signed
/// masses w (1{theta <= s} - 1{theta~ <= s}) / sum(w) at each level.
/// Throws DegenerateWeightsError (with the level) when a level's weight sum
/// is not positive. `extra_cost[l]`, when given, is charged to level l on
/// top of its samples' costs (e.g. rejected attempts).
MultilevelResult combine_levels(std::vector<std::vector<WeightedSample>> level_samples,
                                const TargetFn& f, const std::vector<double>& extra_cost = {});

struct MLMCOptions {
    std::uint64_t max_attempts_per_sample = 10'000'000;
};

/// MLMC-ABC: level l draws N[l] accepted samples at epsilon_l with exact
/// simulation and adds the coupled correction.
MultilevelResult mlmc_abc(const ABCProblem& problem, const ThresholdSchedule& schedule,
                          const std::vector<std::size_t>& N, const TargetFn& f,
                          const RngStream& rng, const MLMCOptions& options = {});

/// N_l = ceil(h^-2 sqrt(v_l / c_l) sum_m sqrt(v_m c_m)), at least 2. With an
/// anchor the unrounded values are rescaled so that N_L = anchor, and h is
/// ignored.
std::vector<std::size_t> optimal_allocation(const std::vector<LevelStats>& stats, double h,
                                            std::optional<std::size_t> anchor = std::nullopt);

struct TrialStats {
    std::vector<LevelStats> stats;
    double total_cost = 0.0;
};

/// Runs MLMC-ABC with N0 samples per level and returns the sample variance
/// of each level's g values and the mean cost per accepted sample.
TrialStats estimate_level_stats(const ABCProblem& problem, const ThresholdSchedule& schedule,
                                std::size_t N0, const TargetFn& f, const RngStream& rng,
                                const MLMCOptions& options = {});

/// Trial, allocate, run. The trial uses a stream derived from rng, and its
/// cost is charged to the returned report.
MultilevelResult mlmc_abc_tuned(const ABCProblem& problem, const ThresholdSchedule& schedule,
                                std::size_t N0, double h, std::optional<std::size_t> anchor,
                                const TargetFn& f, const RngStream& rng,
                                const MLMCOptions& options = {});

/// Stream for trial runs, distinct from every production stream of rng.
RngStream trial_stream(const RngStream& rng);

}  // namespace mfmlmc

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mfmlmc/mf_abc.hpp"
#include "mfmlmc/mlmc_abc.hpp"

namespace mfmlmc {

/// Per-level configuration of MF-MLMC-ABC.
struct LevelPlan {
    struct Level {
        double epsilon = 0.0;
        double epsilon_tilde = 0.0;
        double tau = 0.0;
        std::size_t N = 0;
        ContinuationProbs eta{};
        bool adaptive = false;
    };
    std::vector<Level> levels;

    /// epsilon_tilde = epsilon; `taus` holds one shared value or one per
    /// level; N and eta are left for the caller to fill in.
    static LevelPlan from_schedule(const ThresholdSchedule& schedule,
                                   const std::vector<double>& taus);
    /// Throws ConfigError on non-decreasing thresholds or invalid entries.
    void validate() const;
};

struct MFMLMCOptions {
    double eta_min = kDefaultEtaMin;
    std::optional<std::size_t> burn_in;
    std::size_t batch_size = 0;
    /// Tuned runs only: keep adapting eta during the main run instead of
    /// freezing the trial values.
    bool adaptive = false;
};

/// Trial-phase outcome for one level.
struct LevelTuning {
    ContinuationProbs eta;
    /// Masses and costs for the level's g values.
    RocCostSummary summary;
    double phi = 0.0;
    double mean_cost = 0.0;
    double mean_weight = 0.0;
};

struct MFMLMCResult {
    MultilevelResult multilevel;
    /// Continuation probabilities in force at the end of each level.
    std::vector<ContinuationProbs> eta;
    /// Trial estimates per level (tuned runs only).
    std::vector<LevelTuning> tuning;
};

/// MF-MLMC-ABC: every level draws N_l prior samples with multifidelity
/// weights at (epsilon_l, epsilon~_l, tau_l, eta_l) and the levels are
/// combined as in MLMC-ABC with weighted CDFs and corrections.
MFMLMCResult mf_mlmc_abc(const ABCProblem& problem, const LevelPlan& plan, const TargetFn& f,
                         const RngStream& rng, const MFMLMCOptions& options = {});

struct MFTrialResult {
    std::vector<LevelTuning> levels;
    double total_cost = 0.0;
};

/// Runs adaptive MF-ABC with N0 samples at every level of `plan`, freezes
/// the tuned eta, couples the trial levels to get g values and estimates
/// phi(eta; g), E[C] and E[w] per level from the same samples.
MFTrialResult mf_mlmc_trial(const ABCProblem& problem, const LevelPlan& plan, std::size_t N0,
                            const TargetFn& f, const RngStream& rng,
                            const MFMLMCOptions& options = {});

/// N_l = ceil(h^-2 sqrt(phi_l) / (E[C_l] E[w_l]) sum_m sqrt(phi_m) / E[w_m]),
/// at least 2; with an anchor, rescaled so that N_L = anchor.
std::vector<std::size_t> mf_optimal_allocation(const std::vector<LevelTuning>& levels, double h,
                                               std::optional<std::size_t> anchor = std::nullopt);

/// Trial (on a derived stream), allocate, run with frozen eta. Trial cost
/// is charged to the returned report.
MFMLMCResult mf_mlmc_abc_tuned(const ABCProblem& problem, const ThresholdSchedule& schedule,
                               const std::vector<double>& taus, std::size_t N0, double h,
                               std::optional<std::size_t> anchor, const TargetFn& f,
                               const RngStream& rng, const MFMLMCOptions& options = {});

struct TauSweep {
    std::vector<double> taus;
    std::vector<double> epsilons;
    /// cost[e][t]: total cost of the adaptive run at (epsilons[e], taus[t]).
    std::vector<std::vector<double>> cost;
    std::vector<std::vector<ContinuationProbs>> eta;
    /// Cheapest tau for each epsilon.
    std::vector<double> best_tau;
    /// Tau with the lowest cost summed over all epsilons.
    double shared_tau = 0.0;
};

/// Adaptive MF-ABC with N samples at every (epsilon, tau) pair, all pairs
/// on the same streams.
TauSweep tune_tau_sequence(const ABCProblem& problem, const std::vector<double>& taus,
                           const std::vector<double>& epsilons, std::size_t N, const TargetFn& f,
                           const RngStream& rng, const MFMLMCOptions& options = {});

}  // namespace mfmlmc

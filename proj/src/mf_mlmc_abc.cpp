#include "mfmlmc/mf_mlmc_abc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfmlmc/error.hpp"

namespace mfmlmc {

LevelPlan LevelPlan::from_schedule(const ThresholdSchedule& schedule,
                                   const std::vector<double>& taus) {
    schedule.validate();
    if (taus.size() != 1 && taus.size() != schedule.levels()) {
        throw ConfigError("need one tau or one per level");
    }
    LevelPlan plan;
    for (std::size_t l = 0; l < schedule.levels(); ++l) {
        Level lv;
        lv.epsilon = schedule.epsilons[l];
        lv.epsilon_tilde = schedule.epsilons[l];
        lv.tau = taus.size() == 1 ? taus[0] : taus[l];
        plan.levels.push_back(lv);
    }
    return plan;
}

void LevelPlan::validate() const {
    if (levels.empty()) throw ConfigError("level plan is empty");
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const Level& lv = levels[l];
        if (!(lv.epsilon > 0.0) || !(lv.epsilon_tilde > 0.0)) {
            throw ConfigError("thresholds must be positive");
        }
        if (!(lv.tau > 0.0)) throw ConfigError("tau must be positive");
        lv.eta.validate();
        if (l > 0 && !(lv.epsilon < levels[l - 1].epsilon &&
                       lv.epsilon_tilde < levels[l - 1].epsilon_tilde)) {
            throw ConfigError("thresholds must be strictly decreasing");
        }
    }
}

namespace {

struct LevelRun {
    std::vector<std::vector<WeightedSample>> samples;
    std::vector<ContinuationProbs> eta;
};

LevelRun run_levels(const ABCProblem& problem, const LevelPlan& plan,
                    const std::vector<std::size_t>& N, const TargetFn& f, const RngStream& rng,
                    const MFMLMCOptions& options, bool adaptive_all) {
    LevelRun run;
    for (std::size_t l = 0; l < plan.levels.size(); ++l) {
        const auto& lv = plan.levels[l];
        ABCProblem p = problem;
        p.epsilon = lv.epsilon;
        const FidelityPair pair{lv.tau, lv.epsilon, lv.epsilon_tilde, problem.discrepancy,
                                problem.discrepancy};
        MFOptions mo;
        mo.eta = lv.eta;
        mo.adaptive = adaptive_all || lv.adaptive;
        mo.burn_in = options.burn_in;
        mo.eta_min = options.eta_min;
        mo.batch_size = options.batch_size;
        mo.level = static_cast<int>(l + 1);
        if (mo.adaptive) mo.eta = {};
        // Weight sums are checked per level in combine_levels.
        MFResult r = mf_abc_samples(p, pair, mo, f, N[l], rng);
        run.samples.push_back(std::move(r.samples));
        run.eta.push_back(r.final_eta);
    }
    return run;
}

}  // namespace

MFMLMCResult mf_mlmc_abc(const ABCProblem& problem, const LevelPlan& plan, const TargetFn& f,
                         const RngStream& rng, const MFMLMCOptions& options) {
    plan.validate();
    std::vector<std::size_t> N;
    for (const auto& lv : plan.levels) {
        if (lv.N < (plan.levels.size() == 1 ? 1u : 2u)) {
            throw ConfigError("every level needs N >= 2");
        }
        N.push_back(lv.N);
    }
    LevelRun run = run_levels(problem, plan, N, f, rng, options, false);
    MFMLMCResult result;
    result.multilevel = combine_levels(std::move(run.samples), f);
    for (std::size_t l = 0; l < plan.levels.size(); ++l) {
        result.multilevel.levels[l].epsilon = plan.levels[l].epsilon;
    }
    result.eta = std::move(run.eta);
    return result;
}

MFTrialResult mf_mlmc_trial(const ABCProblem& problem, const LevelPlan& plan, std::size_t N0,
                            const TargetFn& f, const RngStream& rng,
                            const MFMLMCOptions& options) {
    plan.validate();
    if (N0 < 2) throw ConfigError("trial size N0 must be at least 2");
    const std::vector<std::size_t> N(plan.levels.size(), N0);
    LevelRun run = run_levels(problem, plan, N, f, rng, options, true);
    const MultilevelResult ml = combine_levels(std::move(run.samples), f);

    MFTrialResult out;
    out.total_cost = ml.report.total_cost;
    for (std::size_t l = 0; l < ml.levels.size(); ++l) {
        LevelTuning t;
        t.eta = run.eta[l];
        t.summary = estimate_roc_summary(ml.levels[l].samples, ml.levels[l].g);
        t.phi = phi(t.eta, t.summary);
        t.mean_cost = t.summary.expected_cost(t.eta);
        t.mean_weight = t.summary.mean_weight;
        out.levels.push_back(t);
    }
    return out;
}

std::vector<std::size_t> mf_optimal_allocation(const std::vector<LevelTuning>& levels, double h,
                                               std::optional<std::size_t> anchor) {
    if (levels.empty()) throw ConfigError("no level summaries");
    if (!anchor && !(h > 0.0)) throw ConfigError("target standard deviation h must be positive");
    double total = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const LevelTuning& t = levels[l];
        if (!(t.mean_weight > 0.0)) {
            throw AllocationError("level " + std::to_string(l + 1) +
                                  " has no estimated acceptances; use more trial samples");
        }
        if (!(t.mean_cost > 0.0) || !(t.phi >= 0.0)) {
            throw AllocationError("level " + std::to_string(l + 1) + " has invalid phi or cost");
        }
        total += std::sqrt(t.phi) / t.mean_weight;
    }
    std::vector<double> raw(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const LevelTuning& t = levels[l];
        raw[l] = std::sqrt(t.phi) / (t.mean_cost * t.mean_weight) * total / (h > 0.0 ? h * h : 1.0);
    }
    if (anchor) {
        if (!(raw.back() > 0.0)) throw AllocationError("last level has zero phi; cannot anchor");
        const double scale = static_cast<double>(*anchor) / raw.back();
        for (double& r : raw) r *= scale;
    }
    std::vector<std::size_t> N(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
        N[l] = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(raw[l] * (1.0 - 1e-12))));
    }
    return N;
}

MFMLMCResult mf_mlmc_abc_tuned(const ABCProblem& problem, const ThresholdSchedule& schedule,
                               const std::vector<double>& taus, std::size_t N0, double h,
                               std::optional<std::size_t> anchor, const TargetFn& f,
                               const RngStream& rng, const MFMLMCOptions& options) {
    LevelPlan plan = LevelPlan::from_schedule(schedule, taus);
    const MFTrialResult trial = mf_mlmc_trial(problem, plan, N0, f, trial_stream(rng), options);
    const std::vector<std::size_t> N = mf_optimal_allocation(trial.levels, h, anchor);
    for (std::size_t l = 0; l < plan.levels.size(); ++l) {
        plan.levels[l].N = N[l];
        plan.levels[l].eta = trial.levels[l].eta;
        plan.levels[l].adaptive = options.adaptive;
    }
    MFMLMCResult r = mf_mlmc_abc(problem, plan, f, rng, options);
    r.multilevel.tuning_cost = trial.total_cost;
    r.tuning = trial.levels;
    r.multilevel.report.total_cost += trial.total_cost;
    return r;
}

TauSweep tune_tau_sequence(const ABCProblem& problem, const std::vector<double>& taus,
                           const std::vector<double>& epsilons, std::size_t N, const TargetFn& f,
                           const RngStream& rng, const MFMLMCOptions& options) {
    if (taus.empty() || epsilons.empty()) throw ConfigError("need tau and epsilon candidates");
    TauSweep sweep;
    sweep.taus = taus;
    sweep.epsilons = epsilons;
    std::vector<double> column_total(taus.size(), 0.0);
    for (double eps : epsilons) {
        ABCProblem p = problem;
        p.epsilon = eps;
        std::vector<double> costs;
        std::vector<ContinuationProbs> etas;
        for (std::size_t t = 0; t < taus.size(); ++t) {
            MFOptions mo;
            mo.adaptive = true;
            mo.burn_in = options.burn_in;
            mo.eta_min = options.eta_min;
            mo.batch_size = options.batch_size;
            const MFResult r =
                mf_abc_samples(p, FidelityPair::for_problem(p, taus[t]), mo, f, N, rng);
            double cost = 0.0;
            for (const auto& s : r.samples) cost += s.cost;
            costs.push_back(cost);
            etas.push_back(r.final_eta);
            column_total[t] += cost;
        }
        const auto best = std::min_element(costs.begin(), costs.end()) - costs.begin();
        sweep.best_tau.push_back(taus[static_cast<std::size_t>(best)]);
        sweep.cost.push_back(std::move(costs));
        sweep.eta.push_back(std::move(etas));
    }
    const auto shared = std::min_element(column_total.begin(), column_total.end()) - column_total.begin();
    sweep.shared_tau = taus[static_cast<std::size_t>(shared)];
    return sweep;
}

}  // namespace mfmlmc

#include "mfmlmc/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mfmlmc/error.hpp"

namespace mfmlmc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_horizon(double t0, double T) {
    if (!(T > t0)) throw ConfigError("simulation horizon requires T > t0");
}

/// Runs the direct method on `counts` from t0 to T. `before_event(t)` and
/// `after_event(t)` bracket the state change of each event at time t.
template <class BeforeEvent, class AfterEvent>
void run_direct_method(const ReactionNetwork& network, const RateTable& rates,
                       std::vector<Count>& counts, double t0, double T, RngStream& rng,
                       double& draws, BeforeEvent&& before_event, AfterEvent&& after_event) {
    const std::size_t m = network.reaction_count();
    std::vector<double> a(m);
    double t = t0;
    for (;;) {
        double a0 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            a[j] = rates.propensity(counts, j);
            a0 += a[j];
        }
        if (a0 <= 0.0) return;
        const double dt = rng.exponential(a0);
        draws += 1.0;
        if (t + dt > T) return;
        const double target = rng.uniform() * a0;
        draws += 1.0;
        std::size_t j = 0;
        double cumulative = a[0];
        while (cumulative < target && j + 1 < m) cumulative += a[++j];
        // Guard against round-off selecting a zero-propensity reaction.
        while (a[j] <= 0.0 && j > 0) --j;
        t += dt;
        before_event(t);
        for (const auto& [i, d] : network.net_change(j)) counts[i] += d;
        after_event(t);
    }
}

/// One tau-leap of length h from `counts`, clamped to non-negative.
void leap(const ReactionNetwork& network, const RateTable& rates, std::vector<Count>& counts,
          double h, RngStream& rng, std::vector<Count>& fires, double& draws) {
    const std::size_t m = network.reaction_count();
    for (std::size_t j = 0; j < m; ++j) {
        const double mean = rates.propensity(counts, j) * h;
        if (mean > 0.0) {
            fires[j] = std::poisson_distribution<Count>(mean)(rng);
            draws += 1.0;
        } else {
            fires[j] = 0;
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (fires[j] == 0) continue;
        for (const auto& [i, d] : network.net_change(j)) counts[i] += fires[j] * d;
    }
    for (Count& c : counts) c = std::max<Count>(c, 0);
}

/// Tau-leaps from t_start to t_end exactly. `after_leap(t)` sees each
/// intermediate state.
template <class AfterLeap>
void run_tau_leap(const ReactionNetwork& network, const RateTable& rates,
                  std::vector<Count>& counts, double t_start, double t_end, double tau,
                  RngStream& rng, double& draws, AfterLeap&& after_leap) {
    std::vector<Count> fires(network.reaction_count());
    const double span = t_end - t_start;
    // Grid points are computed as t_start + k*tau so no drift accumulates;
    // the relative slack absorbs representation error in span/tau.
    const double slack = 1e-9 * std::max(1.0, span);
    std::size_t k = 0;
    double t = t_start;
    while (t_start + static_cast<double>(k + 1) * tau <= t_end + slack) {
        ++k;
        const double next = std::min(t_start + static_cast<double>(k) * tau, t_end);
        leap(network, rates, counts, next - t, rng, fires, draws);
        t = next;
        after_leap(t);
    }
    if (t_end - t > slack) {
        leap(network, rates, counts, t_end - t, rng, fires, draws);
        t = t_end;
        after_leap(t);
    }
}

}  // namespace

void ObservationModel::validate(double t0) const {
    if (!(sigma > 0.0)) throw ConfigError("observation sigma must be positive");
    if (observed_indices.empty()) throw ConfigError("observation model observes no species");
    if (obs_times.empty()) throw ConfigError("observation model has no observation times");
    for (std::size_t i = 0; i < obs_times.size(); ++i) {
        if (obs_times[i] < t0) throw ConfigError("observation time precedes t0");
        if (i > 0 && !(obs_times[i] > obs_times[i - 1])) {
            throw ConfigError("observation times must be strictly increasing");
        }
    }
}

ObservationSet::ObservationSet(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
        throw ConfigError("observation set has " + std::to_string(values_.size()) +
                          " values, expected " + std::to_string(rows_ * cols_));
    }
}

Trajectory simulate_exact(const ReactionNetwork& network, const ParamVector& theta, double t0,
                          double T, RngStream& rng, CostMode cost_mode) {
    check_horizon(t0, T);
    const auto start = Clock::now();
    const RateTable rates(network, theta);
    Trajectory path;
    path.t_end = T;
    std::vector<Count> counts = network.initial_state();
    path.times.push_back(t0);
    path.states.push_back(counts);
    double draws = 0.0;
    run_direct_method(
        network, rates, counts, t0, T, rng, draws, [](double) {},
        [&](double t) {
            path.times.push_back(t);
            path.states.push_back(counts);
        });
    path.cost = cost_mode == CostMode::kDrawCount ? draws : seconds_since(start);
    return path;
}

Trajectory simulate_tau_leap(const ReactionNetwork& network, const ParamVector& theta, double t0,
                             double T, double tau, RngStream& rng, CostMode cost_mode) {
    check_horizon(t0, T);
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    const auto start = Clock::now();
    const RateTable rates(network, theta);
    Trajectory path;
    path.t_end = T;
    std::vector<Count> counts = network.initial_state();
    path.times.push_back(t0);
    path.states.push_back(counts);
    double draws = 0.0;
    run_tau_leap(network, rates, counts, t0, T, tau, rng, draws, [&](double t) {
        path.times.push_back(t);
        path.states.push_back(counts);
    });
    path.cost = cost_mode == CostMode::kDrawCount ? draws : seconds_since(start);
    return path;
}

State state_at(const Trajectory& trajectory, double t) {
    if (trajectory.times.empty()) throw ConfigError("empty trajectory");
    if (t < trajectory.times.front() || t > trajectory.t_end) {
        throw std::out_of_range("time " + std::to_string(t) + " outside the simulated horizon");
    }
    const auto it = std::upper_bound(trajectory.times.begin(), trajectory.times.end(), t);
    const auto idx = static_cast<std::size_t>(it - trajectory.times.begin()) - 1;
    return {trajectory.states[idx], t};
}

ObservationSet observe(const Trajectory& trajectory, const ObservationModel& obs_model,
                       RngStream& rng) {
    obs_model.validate(trajectory.times.front());
    const std::size_t rows = obs_model.obs_times.size();
    const std::size_t cols = obs_model.observed_indices.size();
    ObservationSet out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const State s = state_at(trajectory, obs_model.obs_times[r]);
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t species = obs_model.observed_indices[c];
            if (species >= s.counts.size()) throw ConfigError("observed species index out of range");
            out(r, c) = static_cast<double>(s.counts[species]) + obs_model.sigma * rng.normal();
        }
    }
    return out;
}

SimulatedData simulate_observations(const ReactionNetwork& network, const ParamVector& theta,
                                    const ObservationModel& obs_model, double t0,
                                    Fidelity fidelity, RngStream& dynamics_rng,
                                    RngStream& obs_rng, CostMode cost_mode) {
    const auto start = Clock::now();
    const RateTable rates(network, theta);
    const auto& times = obs_model.obs_times;
    const auto& observed = obs_model.observed_indices;
    const std::size_t rows = times.size();
    const std::size_t cols = observed.size();
    ObservationSet out(rows, cols);
    std::vector<Count> counts = network.initial_state();
    double draws = 0.0;
    std::size_t next_row = 0;

    auto record_until = [&](double t_exclusive) {
        while (next_row < rows && times[next_row] < t_exclusive) {
            for (std::size_t c = 0; c < cols; ++c) {
                out(next_row, c) = static_cast<double>(counts[observed[c]]);
            }
            ++next_row;
        }
    };

    if (fidelity.exact()) {
        const double T = times.back();
        if (T > t0) {
            run_direct_method(network, rates, counts, t0, T, dynamics_rng, draws, record_until,
                              [](double) {});
        }
        record_until(std::numeric_limits<double>::infinity());
    } else {
        double t = t0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (times[r] > t) {
                run_tau_leap(network, rates, counts, t, times[r], fidelity.tau, dynamics_rng,
                             draws, [](double) {});
                t = times[r];
            }
            for (std::size_t c = 0; c < cols; ++c) out(r, c) = static_cast<double>(counts[observed[c]]);
        }
    }

    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out(r, c) += obs_model.sigma * obs_rng.normal();
    }
    draws += static_cast<double>(2 * rows * cols);
    const double cost = cost_mode == CostMode::kDrawCount ? draws : seconds_since(start);
    return {std::move(out), cost};
}

}  // namespace mfmlmc

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfmlmc/reaction_network.hpp"
#include "mfmlmc/rng.hpp"

namespace mfmlmc {

/// How simulation cost is measured.
enum class CostMode {
    kWallClock,  ///< seconds of wall-clock time
    kDrawCount,  ///< number of random variates drawn; deterministic
};

/// Piecewise-constant sample path on [t0, T].
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<Count>> states;
    double t_end = 0.0;
    double cost = 0.0;
};

/// Additive Gaussian observation of selected species at fixed times.
struct ObservationModel {
    std::vector<std::size_t> observed_indices;
    double sigma = 1.0;
    std::vector<double> obs_times;

    void validate(double t0) const;
};

/// Observed (or simulated-observed) data: one row per observation time,
/// one column per observed species.
class ObservationSet {
public:
    ObservationSet() = default;
    ObservationSet(std::size_t rows, std::size_t cols, std::vector<double> values);
    ObservationSet(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    [[nodiscard]] std::span<const double> values() const { return values_; }

    bool operator==(const ObservationSet&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Gillespie direct method from the network's initial state over [t0, T].
/// Every event is recorded; the path is absorbed once a_0 = 0.
Trajectory simulate_exact(const ReactionNetwork& network, const ParamVector& theta, double t0,
                          double T, RngStream& rng, CostMode cost_mode = CostMode::kDrawCount);

/// Tau-leaping over [t0, T]: leaps of length tau while they fit, then one
/// partial leap so the path ends exactly at T. Post-leap states are
/// clamped to be non-negative.
Trajectory simulate_tau_leap(const ReactionNetwork& network, const ParamVector& theta, double t0,
                             double T, double tau, RngStream& rng,
                             CostMode cost_mode = CostMode::kDrawCount);

/// State of the path at time t (last snapshot with time <= t).
State state_at(const Trajectory& trajectory, double t);

/// Noisy observations of a path: state_at(t_i)[observed] + N(0, sigma^2).
ObservationSet observe(const Trajectory& trajectory, const ObservationModel& obs_model,
                       RngStream& rng);

/// How a forward simulation for inference is carried out.
struct Fidelity {
    /// tau <= 0 selects exact simulation.
    double tau = 0.0;
    [[nodiscard]] bool exact() const { return tau <= 0.0; }
    static Fidelity Exact() { return {}; }
    static Fidelity TauLeap(double tau) { return {tau}; }
};

struct SimulatedData {
    ObservationSet data;
    double cost = 0.0;
};

/// Simulates only what the observation model needs: the path is advanced
/// observation time by observation time (tau-leaping takes a partial leap
/// onto each observation time) and noise is added from `obs_rng`.
SimulatedData simulate_observations(const ReactionNetwork& network, const ParamVector& theta,
                                    const ObservationModel& obs_model, double t0,
                                    Fidelity fidelity, RngStream& dynamics_rng,
                                    RngStream& obs_rng, CostMode cost_mode);

}  // namespace mfmlmc

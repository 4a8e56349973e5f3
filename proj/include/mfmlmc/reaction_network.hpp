#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mfmlmc {

using Count = std::int64_t;

/// Free parameter vector (theta). Units depend on the rate laws that use it.
using ParamVector = std::vector<double>;

/// Copy numbers at a point in time.
struct State {
    std::vector<Count> counts;
    double time = 0.0;

    bool operator==(const State&) const = default;
};

/// Reactant and product stoichiometries of one reaction, one entry per
/// species.
struct Stoichiometry {
    std::vector<int> reactant_counts;
    std::vector<int> product_counts;

    [[nodiscard]] std::vector<int> net_change() const;
    bool operator==(const Stoichiometry&) const = default;
};

/// Reference to a parameter slot of the model's full parameter layout.
struct ParamSlot {
    std::size_t index = 0;
    bool operator==(const ParamSlot&) const = default;
};

/// A rate-law field: either an inline constant or a parameter slot.
using ParamRef = std::variant<double, ParamSlot>;

struct MassAction {
    ParamRef rate;
    bool operator==(const MassAction&) const = default;
};

/// Repressive Hill function alpha0 + alpha K^n / (K^n + P^n), where P is
/// the copy number of the repressor species. Multiplied by the
/// mass-action combinatorial factor of any reactants (1 when there are
/// none).
struct Hill {
    ParamRef alpha0;
    ParamRef alpha;
    ParamRef K;
    ParamRef n;
    std::size_t repressor_index = 0;
    bool operator==(const Hill&) const = default;
};

using RateLaw = std::variant<MassAction, Hill>;

struct Reaction {
    Stoichiometry stoichiometry;
    RateLaw rate;
    bool operator==(const Reaction&) const = default;
};

/// A chemical reaction network with a parameter layout.
///
/// Parameters live in "slots". Each slot is either free (supplied by theta
/// at evaluation time, in ascending slot order) or fixed to a constant.
/// The free-slot count is the dimensionality of theta.
class ReactionNetwork {
public:
    ReactionNetwork() = default;

    /// All slots free: `param_count` slots, theta[i] feeds slot i.
    ReactionNetwork(std::vector<std::string> species_names, std::vector<Reaction> reactions,
                    std::vector<Count> initial_state, std::size_t param_count);

    /// Explicit layout: `slots[i]` holds the fixed value of slot i or
    /// nullopt when slot i is free.
    ReactionNetwork(std::vector<std::string> species_names, std::vector<Reaction> reactions,
                    std::vector<Count> initial_state, std::vector<std::optional<double>> slots,
                    std::vector<std::string> slot_names = {});

    [[nodiscard]] std::size_t species_count() const { return species_names_.size(); }
    [[nodiscard]] std::size_t reaction_count() const { return reactions_.size(); }
    [[nodiscard]] std::size_t param_count() const { return free_slots_.size(); }
    [[nodiscard]] const std::vector<std::string>& species_names() const { return species_names_; }
    [[nodiscard]] const std::vector<Reaction>& reactions() const { return reactions_; }
    [[nodiscard]] const std::vector<Count>& initial_state() const { return initial_state_; }
    [[nodiscard]] const std::vector<std::optional<double>>& slots() const { return slots_; }
    [[nodiscard]] const std::vector<std::string>& slot_names() const { return slot_names_; }
    /// Slot index of each free parameter, in theta order.
    [[nodiscard]] const std::vector<std::size_t>& free_slots() const { return free_slots_; }
    [[nodiscard]] std::optional<std::size_t> species_index(const std::string& name) const;

    /// Value of a rate-law field under theta.
    [[nodiscard]] double resolve(const ParamRef& ref, std::span<const double> theta) const;

    /// Net state change of reaction j as sparse (species, delta) pairs.
    [[nodiscard]] const std::vector<std::pair<std::size_t, int>>& net_change(std::size_t j) const {
        return net_changes_[j];
    }
    /// Reactant requirements of reaction j as sparse (species, count) pairs.
    [[nodiscard]] const std::vector<std::pair<std::size_t, int>>& reactants(std::size_t j) const {
        return reactant_lists_[j];
    }

    bool operator==(const ReactionNetwork& other) const {
        return species_names_ == other.species_names_ && reactions_ == other.reactions_ &&
               initial_state_ == other.initial_state_ && slots_ == other.slots_ &&
               slot_names_ == other.slot_names_;
    }

private:
    void validate_and_index();

    std::vector<std::string> species_names_;
    std::vector<Reaction> reactions_;
    std::vector<Count> initial_state_;
    std::vector<std::optional<double>> slots_;
    std::vector<std::string> slot_names_;

    std::vector<std::size_t> free_slots_;
    std::vector<std::optional<std::size_t>> slot_to_theta_;
    std::vector<std::vector<std::pair<std::size_t, int>>> net_changes_;
    std::vector<std::vector<std::pair<std::size_t, int>>> reactant_lists_;
};

/// nu! * C(x, nu) = x (x-1) ... (x-nu+1): the number of ordered ways to
/// pick nu reactant molecules out of x. Exact in integer arithmetic while
/// it fits, falling-factorial in floating point beyond that.
double falling_factorial(Count x, int nu);

/// Propensity a_j of reaction j at `state` under theta. Zero when a
/// reactant requirement exceeds the available copy number or when the
/// state holds a negative count.
double propensity(const ReactionNetwork& network, std::span<const Count> counts,
                  std::span<const double> theta, std::size_t j);
double propensity(const ReactionNetwork& network, const State& state, const ParamVector& theta,
                  std::size_t j);

/// Sum of all propensities, a_0.
double total_propensity(const ReactionNetwork& network, const State& state,
                        const ParamVector& theta);

/// Rate laws with every parameter resolved under one theta; the form the
/// simulators evaluate in their inner loops.
class RateTable {
public:
    RateTable(const ReactionNetwork& network, std::span<const double> theta);

    /// Propensity of reaction j; counts must be non-negative.
    [[nodiscard]] double propensity(std::span<const Count> counts, std::size_t j) const;

private:
    struct Entry {
        bool hill = false;
        double k = 0.0;
        double alpha0 = 0.0, alpha = 0.0, Kn = 0.0, n = 0.0;
        std::size_t repressor = 0;
    };
    const ReactionNetwork* network_;
    std::vector<Entry> entries_;
};

/// Throws ConfigError unless theta has the network's free-parameter count.
void check_theta(const ReactionNetwork& network, std::span<const double> theta);

}  // namespace mfmlmc

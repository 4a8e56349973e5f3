#include "mfmlmc/reaction_network.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mfmlmc/error.hpp"

namespace mfmlmc {

std::vector<int> Stoichiometry::net_change() const {
    std::vector<int> nu(product_counts.size());
    for (std::size_t i = 0; i < nu.size(); ++i) nu[i] = product_counts[i] - reactant_counts[i];
    return nu;
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species_names,
                                 std::vector<Reaction> reactions,
                                 std::vector<Count> initial_state, std::size_t param_count)
    : ReactionNetwork(std::move(species_names), std::move(reactions), std::move(initial_state),
                      std::vector<std::optional<double>>(param_count)) {}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species_names,
                                 std::vector<Reaction> reactions,
                                 std::vector<Count> initial_state,
                                 std::vector<std::optional<double>> slots,
                                 std::vector<std::string> slot_names)
    : species_names_(std::move(species_names)),
      reactions_(std::move(reactions)),
      initial_state_(std::move(initial_state)),
      slots_(std::move(slots)),
      slot_names_(std::move(slot_names)) {
    validate_and_index();
}

void ReactionNetwork::validate_and_index() {
    const std::size_t ns = species_names_.size();
    if (initial_state_.size() != ns) {
        throw ConfigError("initial state has " + std::to_string(initial_state_.size()) +
                          " entries, expected " + std::to_string(ns));
    }
    for (Count c : initial_state_) {
        if (c < 0) throw ConfigError("initial state must be non-negative");
    }
    if (!slot_names_.empty() && slot_names_.size() != slots_.size()) {
        throw ConfigError("slot_names must be empty or match the slot count");
    }

    free_slots_.clear();
    slot_to_theta_.assign(slots_.size(), std::nullopt);
    for (std::size_t s = 0; s < slots_.size(); ++s) {
        if (!slots_[s]) {
            slot_to_theta_[s] = free_slots_.size();
            free_slots_.push_back(s);
        }
    }

    auto check_ref = [&](const ParamRef& ref, std::size_t j) {
        if (const auto* slot = std::get_if<ParamSlot>(&ref)) {
            if (slot->index >= slots_.size()) {
                throw ConfigError("reaction " + std::to_string(j) + " references parameter slot " +
                                  std::to_string(slot->index) + " but only " +
                                  std::to_string(slots_.size()) + " exist");
            }
        } else if (std::get<double>(ref) < 0.0) {
            throw ConfigError("reaction " + std::to_string(j) + " has a negative rate constant");
        }
    };

    net_changes_.clear();
    reactant_lists_.clear();
    for (std::size_t j = 0; j < reactions_.size(); ++j) {
        const auto& st = reactions_[j].stoichiometry;
        if (st.reactant_counts.size() != ns || st.product_counts.size() != ns) {
            throw ConfigError("reaction " + std::to_string(j) +
                              " stoichiometry does not match the species count");
        }
        std::vector<std::pair<std::size_t, int>> nu, reac;
        for (std::size_t i = 0; i < ns; ++i) {
            if (st.reactant_counts[i] < 0 || st.product_counts[i] < 0) {
                throw ConfigError("stoichiometries must be non-negative");
            }
            if (st.reactant_counts[i] > 0) reac.emplace_back(i, st.reactant_counts[i]);
            const int d = st.product_counts[i] - st.reactant_counts[i];
            if (d != 0) nu.emplace_back(i, d);
        }
        net_changes_.push_back(std::move(nu));
        reactant_lists_.push_back(std::move(reac));

        std::visit(
            [&](const auto& law) {
                using T = std::decay_t<decltype(law)>;
                if constexpr (std::is_same_v<T, MassAction>) {
                    check_ref(law.rate, j);
                } else {
                    check_ref(law.alpha0, j);
                    check_ref(law.alpha, j);
                    check_ref(law.K, j);
                    check_ref(law.n, j);
                    if (law.repressor_index >= ns) {
                        throw ConfigError("Hill repressor index out of range in reaction " +
                                          std::to_string(j));
                    }
                }
            },
            reactions_[j].rate);
    }
}

std::optional<std::size_t> ReactionNetwork::species_index(const std::string& name) const {
    for (std::size_t i = 0; i < species_names_.size(); ++i) {
        if (species_names_[i] == name) return i;
    }
    return std::nullopt;
}

double ReactionNetwork::resolve(const ParamRef& ref, std::span<const double> theta) const {
    if (const auto* c = std::get_if<double>(&ref)) return *c;
    const std::size_t s = std::get<ParamSlot>(ref).index;
    if (slots_[s]) return *slots_[s];
    return theta[*slot_to_theta_[s]];
}

double falling_factorial(Count x, int nu) {
    if (nu <= 0) return 1.0;
    if (x < nu) return 0.0;
    // x^nu < 2^63 keeps the integer product exact.
    const double log_bound = static_cast<double>(nu) * std::log2(static_cast<double>(x));
    if (log_bound < 62.0) {
        std::uint64_t p = 1;
        for (int k = 0; k < nu; ++k) p *= static_cast<std::uint64_t>(x - k);
        return static_cast<double>(p);
    }
    double p = 1.0;
    for (int k = 0; k < nu; ++k) p *= static_cast<double>(x - k);
    return p;
}

void check_theta(const ReactionNetwork& network, std::span<const double> theta) {
    if (theta.size() != network.param_count()) {
        throw ConfigError("theta has " + std::to_string(theta.size()) + " entries, network expects " +
                          std::to_string(network.param_count()));
    }
}

RateTable::RateTable(const ReactionNetwork& network, std::span<const double> theta)
    : network_(&network) {
    check_theta(network, theta);
    entries_.reserve(network.reaction_count());
    for (const auto& reaction : network.reactions()) {
        Entry e;
        if (const auto* ma = std::get_if<MassAction>(&reaction.rate)) {
            e.k = network.resolve(ma->rate, theta);
        } else {
            const auto& hill = std::get<Hill>(reaction.rate);
            e.hill = true;
            e.alpha0 = network.resolve(hill.alpha0, theta);
            e.alpha = network.resolve(hill.alpha, theta);
            e.n = network.resolve(hill.n, theta);
            e.Kn = std::pow(network.resolve(hill.K, theta), e.n);
            e.repressor = hill.repressor_index;
        }
        entries_.push_back(e);
    }
}

double RateTable::propensity(std::span<const Count> counts, std::size_t j) const {
    double combinatorial = 1.0;
    for (const auto& [i, nu] : network_->reactants(j)) {
        if (counts[i] < nu) return 0.0;
        combinatorial *= nu == 1 ? static_cast<double>(counts[i]) : falling_factorial(counts[i], nu);
    }
    const Entry& e = entries_[j];
    double rate = e.k;
    if (e.hill) {
        const double p = static_cast<double>(counts[e.repressor]);
        rate = e.alpha0 + e.alpha * e.Kn / (e.Kn + std::pow(p, e.n));
    }
    return rate > 0.0 ? rate * combinatorial : 0.0;
}

double propensity(const ReactionNetwork& network, std::span<const Count> counts,
                  std::span<const double> theta, std::size_t j) {
    for (Count c : counts) {
        if (c < 0) return 0.0;
    }
    return RateTable(network, theta).propensity(counts, j);
}

double propensity(const ReactionNetwork& network, const State& state, const ParamVector& theta,
                  std::size_t j) {
    if (j >= network.reaction_count()) throw ConfigError("reaction index out of range");
    if (state.counts.size() != network.species_count()) {
        throw ConfigError("state dimension does not match the species count");
    }
    check_theta(network, theta);
    return propensity(network, std::span<const Count>(state.counts), theta, j);
}

double total_propensity(const ReactionNetwork& network, const State& state,
                        const ParamVector& theta) {
    if (state.counts.size() != network.species_count()) {
        throw ConfigError("state dimension does not match the species count");
    }
    check_theta(network, theta);
    double a0 = 0.0;
    for (std::size_t j = 0; j < network.reaction_count(); ++j) {
        a0 += propensity(network, std::span<const Count>(state.counts), theta, j);
    }
    return a0;
}

}  // namespace mfmlmc

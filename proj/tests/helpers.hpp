#pragma once

#include <cmath>
#include <initializer_list>
#include <numeric>
#include <utility>
#include <vector>

#include "mfmlmc/abc.hpp"
#include "mfmlmc/reaction_network.hpp"

namespace testing {

using namespace mfmlmc;

inline Reaction mass_action(std::size_t n, std::initializer_list<std::pair<std::size_t, int>> in,
                            std::initializer_list<std::pair<std::size_t, int>> out, ParamRef k) {
    Stoichiometry s{std::vector<int>(n, 0), std::vector<int>(n, 0)};
    for (auto [i, c] : in) s.reactant_counts[i] += c;
    for (auto [i, c] : out) s.product_counts[i] += c;
    return {s, MassAction{k}};
}

/// 0 -> X at rate theta[0].
inline ReactionNetwork birth(Count x0 = 0) {
    return ReactionNetwork({"X"}, {mass_action(1, {}, {{0, 1}}, ParamSlot{0})}, {x0}, 1);
}

/// X -> 0 at rate theta[0].
inline ReactionNetwork death(Count x0) {
    return ReactionNetwork({"X"}, {mass_action(1, {{0, 1}}, {}, ParamSlot{0})}, {x0}, 1);
}

/// E + S <-> ES -> E + P with theta = (k1, k2, k3).
inline ReactionNetwork michaelis_menten(Count e0, Count s0) {
    return ReactionNetwork({"E", "S", "ES", "P"},
                           {mass_action(4, {{0, 1}, {1, 1}}, {{2, 1}}, ParamSlot{0}),
                            mass_action(4, {{2, 1}}, {{0, 1}, {1, 1}}, ParamSlot{1}),
                            mass_action(4, {{2, 1}}, {{0, 1}, {3, 1}}, ParamSlot{2})},
                           {e0, s0, 0, 0}, 3);
}

/// Pure birth from 0 at rate k ~ U(0, 10), observed once at T = 1 with
/// negligible noise against y = 0. At epsilon = c + 0.5 a draw is accepted
/// iff X_1 <= c.
inline ABCProblem birth_problem(double epsilon = 5.5) {
    ABCProblem p;
    p.network = birth();
    p.obs_model = {{0}, 1e-9, {1.0}};
    p.data = ObservationSet(1, 1, {0.0});
    p.prior = {{0.0}, {10.0}};
    p.epsilon = epsilon;
    p.cost_mode = CostMode::kDrawCount;
    return p;
}

/// P(Pois(k) <= c) integrated over k in [0, a].
inline double integrated_poisson_cdf(double a, int c) {
    double total = 0.0;
    for (int x = 0; x <= c; ++x) {
        double term = 1.0, tail = 0.0;
        for (int j = 0; j <= x; ++j) {
            tail += term;
            term *= a / (j + 1);
        }
        total += 1.0 - std::exp(-a) * tail;
    }
    return total;
}

inline double mean(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample variance with n - 1 denominator.
inline double variance(const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double std_error(const std::vector<double>& x) {
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

/// Least-squares slope of y on x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace testing

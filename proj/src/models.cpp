#include "mfmlmc/models.hpp"

#include <cmath>

#include "mfmlmc/error.hpp"

namespace mfmlmc {

namespace {

Stoichiometry stoich(std::size_t n_species, std::initializer_list<std::pair<std::size_t, int>> in,
                     std::initializer_list<std::pair<std::size_t, int>> out) {
    Stoichiometry s{std::vector<int>(n_species, 0), std::vector<int>(n_species, 0)};
    for (auto [i, c] : in) s.reactant_counts[i] += c;
    for (auto [i, c] : out) s.product_counts[i] += c;
    return s;
}

Reaction mass_action(std::size_t n, std::initializer_list<std::pair<std::size_t, int>> in,
                     std::initializer_list<std::pair<std::size_t, int>> out, std::size_t slot) {
    return {stoich(n, in, out), MassAction{ParamSlot{slot}}};
}

Count scaled(Count full_value, Scale scale) {
    if (scale == Scale::kPaper) return full_value;
    return static_cast<Count>(std::llround(static_cast<double>(full_value) / 10.0));
}

double threshold(double full_value, Scale scale) {
    return scale == Scale::kPaper ? full_value : full_value / 10.0;
}

BenchmarkSpec michaelis_menten(Scale scale, std::optional<double> sigma) {
    enum { E, S, ES, P };
    const std::size_t n = 4;
    std::vector<Reaction> reactions{
        mass_action(n, {{E, 1}, {S, 1}}, {{ES, 1}}, 0),
        mass_action(n, {{ES, 1}}, {{E, 1}, {S, 1}}, 1),
        mass_action(n, {{ES, 1}}, {{E, 1}, {P, 1}}, 2),
    };
    BenchmarkSpec spec;
    spec.id = BenchmarkId::kMichaelisMenten;
    spec.scale = scale;
    spec.name = "michaelis_menten";
    spec.network = ReactionNetwork({"E", "S", "ES", "P"}, std::move(reactions),
                                   {scaled(1000, scale), scaled(1000, scale), 0, 0},
                                   std::vector<std::optional<double>>(3), {"k1", "k2", "k3"});
    spec.obs_model = {{P}, sigma.value_or(2.0), {20, 40, 60, 80}};
    spec.truth = {0.001, 0.005, 0.01};
    spec.prior = {{0.0, 0.0, 0.0}, {0.003, 0.0015, 0.05}};
    spec.target_index = 2;
    spec.data_seed = 20211;
    spec.epsilon_1 = threshold(1600, scale);
    spec.target_epsilons = {threshold(200, scale), threshold(300, scale), threshold(400, scale),
                            threshold(500, scale), threshold(600, scale)};
    spec.default_taus = {0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64, 1.28};
    return spec;
}

BenchmarkSpec repressilator(Scale scale, std::optional<double> sigma) {
    // Species M1, M2, M3, P1, P2, P3. Slots K, n, alpha0, alpha, beta, gamma.
    const std::size_t n = 6;
    enum { kK, kN, kAlpha0, kAlpha, kBeta, kGamma };
    std::vector<Reaction> reactions;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t m = i;
        const std::size_t p = 3 + i;
        // Gene i is repressed by the protein of the gene before it in the cycle.
        const std::size_t repressor = 3 + (i + 2) % 3;
        reactions.push_back({stoich(n, {}, {{m, 1}}),
                             Hill{ParamSlot{kAlpha0}, ParamSlot{kAlpha}, ParamSlot{kK},
                                  ParamSlot{kN}, repressor}});
        reactions.push_back(mass_action(n, {{m, 1}}, {{m, 1}, {p, 1}}, kBeta));
        reactions.push_back(mass_action(n, {{p, 1}}, {}, kBeta));
        reactions.push_back(mass_action(n, {{m, 1}}, {}, kGamma));
    }
    const double pop = scale == Scale::kPaper ? 1.0 : 0.1;
    BenchmarkSpec spec;
    spec.id = BenchmarkId::kRepressilator;
    spec.scale = scale;
    spec.name = "repressilator";
    spec.network = ReactionNetwork(
        {"M1", "M2", "M3", "P1", "P2", "P3"}, std::move(reactions),
        {0, 0, 0, scaled(40, scale), scaled(20, scale), scaled(60, scale)},
        {std::nullopt, std::nullopt, 1.0 * pop, 1000.0 * pop, 5.0, 1.0},
        {"K", "n", "alpha0", "alpha", "beta", "gamma"});
    std::vector<double> times;
    for (int i = 1; i <= 10; ++i) times.push_back(i);
    // Desk populations are ten times smaller, so the noise shrinks with them;
    // with sigma = 10 the noise floor alone exceeds every desk threshold.
    spec.obs_model = {{3, 4, 5}, sigma.value_or(10.0 * pop), times};
    spec.truth = {20.0, 2.0};
    spec.prior = {{10.0, 1.0}, {30.0, 4.0}};
    spec.target_index = 0;
    spec.data_seed = 20212;
    // Desk thresholds give the same prior acceptance rates as 1600, 350 and
    // 500 at full scale (about 67%, 5% and 21%).
    spec.epsilon_1 = scale == Scale::kPaper ? 1600.0 : 130.0;
    spec.target_epsilons = scale == Scale::kPaper ? std::vector<double>{350.0, 500.0}
                                                  : std::vector<double>{70.0, 87.0};
    spec.default_taus = {0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64};
    return spec;
}

BenchmarkSpec mapk2(Scale scale, std::optional<double> sigma) {
    enum { E, X, XE, Xs, P1, XsP1, Y, XsY, Ys, P2, YsP2 };
    const std::size_t n = 11;
    std::vector<Reaction> reactions{
        mass_action(n, {{X, 1}, {E, 1}}, {{XE, 1}}, 0),
        mass_action(n, {{XE, 1}}, {{X, 1}, {E, 1}}, 1),
        mass_action(n, {{XE, 1}}, {{Xs, 1}, {E, 1}}, 2),
        mass_action(n, {{Xs, 1}, {P1, 1}}, {{XsP1, 1}}, 3),
        mass_action(n, {{XsP1, 1}}, {{Xs, 1}, {P1, 1}}, 4),
        mass_action(n, {{XsP1, 1}}, {{X, 1}, {P1, 1}}, 5),
        mass_action(n, {{Xs, 1}, {Y, 1}}, {{XsY, 1}}, 6),
        mass_action(n, {{XsY, 1}}, {{Xs, 1}, {Y, 1}}, 7),
        mass_action(n, {{XsY, 1}}, {{Xs, 1}, {Ys, 1}}, 8),
        mass_action(n, {{Ys, 1}, {P2, 1}}, {{YsP2, 1}}, 9),
        mass_action(n, {{YsP2, 1}}, {{Ys, 1}, {P2, 1}}, 10),
        mass_action(n, {{YsP2, 1}}, {{Y, 1}, {P2, 1}}, 11),
    };
    const double k1 = 0.001, k4 = 0.001, k7 = 0.0001, k10 = 0.001;
    std::vector<std::optional<double>> slots(12);
    slots[0] = k1;
    slots[3] = k4;
    slots[6] = k7;
    slots[9] = k10;
    std::vector<std::string> names;
    for (int i = 1; i <= 12; ++i) names.push_back("k" + std::to_string(i));

    BenchmarkSpec spec;
    spec.id = BenchmarkId::kMapk2;
    spec.scale = scale;
    spec.name = "mapk2";
    std::vector<Count> x0(n, 0);
    x0[E] = scaled(94, scale);
    x0[X] = scaled(757, scale);
    x0[Y] = scaled(567, scale);
    x0[P1] = scaled(32, scale);
    x0[P2] = scaled(32, scale);
    spec.network = ReactionNetwork({"E", "X", "XE", "X*", "P1", "X*P1", "Y", "X*Y", "Y*", "P2",
                                    "Y*P2"},
                                   std::move(reactions), x0, slots, names);
    std::vector<double> times;
    for (int i = 1; i <= 50; ++i) times.push_back(4.0 * i);
    spec.obs_model = {{Xs, Ys}, sigma.value_or(10.0), times};
    // theta = [k2, k3, k5, k6, k8, k9, k11, k12]
    spec.truth = {k1 / 120, 0.18, k4 / 22, 0.3, k7 / 110, 0.2, k10 / 22, 0.3};
    spec.prior = {std::vector<double>(8, 0.0), {k1, 1.0, k4, 1.0, k7, 1.0, k10, 1.0}};
    spec.target_index = 6;
    spec.data_seed = 20213;
    spec.epsilon_1 = threshold(1600, scale);
    spec.target_epsilons = {threshold(300, scale)};
    spec.default_taus = {0.5};
    return spec;
}

}  // namespace

BenchmarkId parse_benchmark_id(const std::string& name) {
    if (name == "michaelis_menten") return BenchmarkId::kMichaelisMenten;
    if (name == "repressilator") return BenchmarkId::kRepressilator;
    if (name == "mapk2") return BenchmarkId::kMapk2;
    throw ConfigError("unknown benchmark '" + name +
                      "' (expected michaelis_menten, repressilator or mapk2)");
}

std::string to_string(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::kMichaelisMenten: return "michaelis_menten";
        case BenchmarkId::kRepressilator: return "repressilator";
        case BenchmarkId::kMapk2: return "mapk2";
    }
    return "unknown";
}

Scale parse_scale(const std::string& name) {
    if (name == "paper") return Scale::kPaper;
    if (name == "desk") return Scale::kDesk;
    throw ConfigError("unknown scale '" + name + "' (expected paper or desk)");
}

std::string to_string(Scale scale) { return scale == Scale::kPaper ? "paper" : "desk"; }

BenchmarkSpec build_benchmark(BenchmarkId id, Scale scale, std::optional<double> sigma) {
    if (sigma && !(*sigma > 0.0)) throw ConfigError("sigma must be positive");
    switch (id) {
        case BenchmarkId::kMichaelisMenten: return michaelis_menten(scale, sigma);
        case BenchmarkId::kRepressilator: return repressilator(scale, sigma);
        case BenchmarkId::kMapk2: return mapk2(scale, sigma);
    }
    throw ConfigError("unknown benchmark");
}

ObservationSet generate_data(const BenchmarkSpec& spec, std::uint64_t seed) {
    const RngStream root(seed, 0);
    RngStream dyn = root.derive(0, 0, Purpose::kData);
    RngStream obs = root.derive(0, 1, Purpose::kData);
    return simulate_observations(spec.network, spec.truth, spec.obs_model, spec.t0,
                                 Fidelity::Exact(), dyn, obs, CostMode::kDrawCount)
        .data;
}

ABCProblem make_problem(const BenchmarkSpec& spec, ObservationSet data, double epsilon,
                        CostMode cost_mode) {
    ABCProblem p;
    p.network = spec.network;
    p.obs_model = spec.obs_model;
    p.data = std::move(data);
    p.prior = spec.prior;
    p.epsilon = epsilon;
    p.t0 = spec.t0;
    p.cost_mode = cost_mode;
    p.validate();
    return p;
}

}  // namespace mfmlmc

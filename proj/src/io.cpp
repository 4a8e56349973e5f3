#include "mfmlmc/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "mfmlmc/error.hpp"

namespace mfmlmc {

namespace {

json param_ref_to_json(const ParamRef& ref) {
    if (const auto* slot = std::get_if<ParamSlot>(&ref)) return json{{"param", slot->index}};
    return std::get<double>(ref);
}

ParamRef param_ref_from_json(const json& j, const char* field) {
    if (j.is_number()) return j.get<double>();
    if (j.is_object() && j.contains("param")) return ParamSlot{j.at("param").get<std::size_t>()};
    throw ConfigError(std::string("rate field '") + field + "' must be a number or {\"param\": slot}");
}

json counts_to_json(const std::vector<int>& counts, const std::vector<std::string>& species) {
    json out = json::object();
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] != 0) out[species[i]] = counts[i];
    }
    return out;
}

std::vector<int> counts_from_json(const json& j, const ReactionNetwork& names_only,
                                  const std::vector<std::string>& species) {
    (void)names_only;
    std::vector<int> counts(species.size(), 0);
    for (const auto& [name, value] : j.items()) {
        const auto it = std::find(species.begin(), species.end(), name);
        if (it == species.end()) throw ConfigError("unknown species '" + name + "' in reaction");
        const int c = value.get<int>();
        if (c < 0) throw ConfigError("stoichiometric counts must be non-negative");
        counts[static_cast<std::size_t>(it - species.begin())] = c;
    }
    return counts;
}

std::size_t species_by_name(const std::vector<std::string>& species, const std::string& name) {
    const auto it = std::find(species.begin(), species.end(), name);
    if (it == species.end()) throw ConfigError("unknown species '" + name + "'");
    return static_cast<std::size_t>(it - species.begin());
}

}  // namespace

json network_to_json(const ReactionNetwork& network) {
    const auto& species = network.species_names();
    json j;
    j["species"] = species;
    j["initial_state"] = network.initial_state();
    json params;
    params["count"] = network.slots().size();
    json fixed = json::object();
    for (std::size_t i = 0; i < network.slots().size(); ++i) {
        if (network.slots()[i]) fixed[std::to_string(i)] = *network.slots()[i];
    }
    params["fixed"] = fixed;
    if (!network.slot_names().empty()) params["names"] = network.slot_names();
    j["params"] = params;

    json reactions = json::array();
    for (const Reaction& r : network.reactions()) {
        json jr;
        jr["reactants"] = counts_to_json(r.stoichiometry.reactant_counts, species);
        jr["products"] = counts_to_json(r.stoichiometry.product_counts, species);
        if (const auto* ma = std::get_if<MassAction>(&r.rate)) {
            jr["rate"] = {{"type", "mass_action"}, {"k", param_ref_to_json(ma->rate)}};
        } else {
            const auto& h = std::get<Hill>(r.rate);
            jr["rate"] = {{"type", "hill"},
                          {"alpha0", param_ref_to_json(h.alpha0)},
                          {"alpha", param_ref_to_json(h.alpha)},
                          {"K", param_ref_to_json(h.K)},
                          {"n", param_ref_to_json(h.n)},
                          {"repressor", species.at(h.repressor_index)}};
        }
        reactions.push_back(jr);
    }
    j["reactions"] = reactions;
    return j;
}

ReactionNetwork network_from_json(const json& j) {
    try {
        const auto species = j.at("species").get<std::vector<std::string>>();
        const auto initial = j.at("initial_state").get<std::vector<Count>>();
        const json& params = j.at("params");
        const auto count = params.at("count").get<std::size_t>();
        std::vector<std::optional<double>> slots(count);
        if (params.contains("fixed")) {
            for (const auto& [key, value] : params.at("fixed").items()) {
                const std::size_t idx = std::stoul(key);
                if (idx >= count) throw ConfigError("fixed parameter slot " + key + " out of range");
                slots[idx] = value.get<double>();
            }
        }
        std::vector<std::string> names;
        if (params.contains("names")) names = params.at("names").get<std::vector<std::string>>();

        ReactionNetwork names_only;
        std::vector<Reaction> reactions;
        for (const json& jr : j.at("reactions")) {
            Reaction r;
            r.stoichiometry.reactant_counts =
                counts_from_json(jr.value("reactants", json::object()), names_only, species);
            r.stoichiometry.product_counts =
                counts_from_json(jr.value("products", json::object()), names_only, species);
            const json& rate = jr.at("rate");
            const auto type = rate.at("type").get<std::string>();
            if (type == "mass_action") {
                r.rate = MassAction{param_ref_from_json(rate.at("k"), "k")};
            } else if (type == "hill") {
                r.rate = Hill{param_ref_from_json(rate.at("alpha0"), "alpha0"),
                              param_ref_from_json(rate.at("alpha"), "alpha"),
                              param_ref_from_json(rate.at("K"), "K"),
                              param_ref_from_json(rate.at("n"), "n"),
                              species_by_name(species, rate.at("repressor").get<std::string>())};
            } else {
                throw ConfigError("unknown rate type '" + type + "'");
            }
            reactions.push_back(std::move(r));
        }
        return ReactionNetwork(species, std::move(reactions), initial, std::move(slots),
                               std::move(names));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed model file: ") + e.what());
    }
}

json obs_model_to_json(const ObservationModel& obs, const ReactionNetwork& network) {
    std::vector<std::string> names;
    for (std::size_t i : obs.observed_indices) names.push_back(network.species_names().at(i));
    return {{"species", names}, {"times", obs.obs_times}, {"sigma", obs.sigma}};
}

ObservationModel obs_model_from_json(const json& j, const ReactionNetwork& network) {
    try {
        ObservationModel obs;
        for (const auto& name : j.at("species").get<std::vector<std::string>>()) {
            obs.observed_indices.push_back(species_by_name(network.species_names(), name));
        }
        obs.obs_times = j.at("times").get<std::vector<double>>();
        obs.sigma = j.at("sigma").get<double>();
        return obs;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed observation settings: ") + e.what());
    }
}

void write_observations_csv(const std::filesystem::path& path, const ObservationSet& data,
                            const ObservationModel& obs, const ReactionNetwork& network) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "time";
    for (std::size_t i : obs.observed_indices) out << ',' << network.species_names().at(i);
    out << '\n' << std::setprecision(17);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        out << obs.obs_times[r];
        for (std::size_t c = 0; c < data.cols(); ++c) out << ',' << data(r, c);
        out << '\n';
    }
}

ObservationSet read_observations_csv(const std::filesystem::path& path,
                                     const ObservationModel& obs) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // time
        std::size_t cols = 0;
        while (std::getline(ss, cell, ',')) {
            values.push_back(std::stod(cell));
            ++cols;
        }
        if (cols != obs.observed_indices.size()) {
            throw ConfigError("data row " + std::to_string(rows + 1) + " has " +
                              std::to_string(cols) + " values, expected " +
                              std::to_string(obs.observed_indices.size()));
        }
        ++rows;
    }
    if (rows != obs.obs_times.size()) throw ConfigError("data rows do not match observation times");
    return ObservationSet(rows, obs.observed_indices.size(), std::move(values));
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

TargetFn TargetSpec::function() const {
    return kind == Kind::kMean ? component_mean(index) : indicator_below(index, threshold);
}

json TargetSpec::to_json() const {
    if (kind == Kind::kMean) return {{"type", "mean"}, {"index", index}};
    return {{"type", "indicator"}, {"index", index}, {"threshold", threshold}};
}

TargetSpec TargetSpec::from_json(const json& j) {
    TargetSpec t;
    const auto type = j.value("type", std::string("mean"));
    if (type == "mean") {
        t.kind = Kind::kMean;
    } else if (type == "indicator") {
        t.kind = Kind::kIndicator;
        t.threshold = j.at("threshold").get<double>();
    } else {
        throw ConfigError("unknown target type '" + type + "'");
    }
    t.index = j.value("index", std::size_t{0});
    return t;
}

CostMode parse_cost_mode(const std::string& name) {
    if (name == "wall") return CostMode::kWallClock;
    if (name == "draws") return CostMode::kDrawCount;
    throw ConfigError("unknown cost mode '" + name + "' (expected wall or draws)");
}

std::string to_string(CostMode mode) { return mode == CostMode::kWallClock ? "wall" : "draws"; }

ProblemConfig load_problem_config(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    const auto base = path.parent_path();
    try {
        ProblemConfig cfg;
        ABCProblem& p = cfg.problem;
        p.network = network_from_json(read_json_file(base / j.at("model").get<std::string>()));
        p.obs_model = obs_model_from_json(j.at("observation"), p.network);
        p.data = read_observations_csv(base / j.at("data").get<std::string>(), p.obs_model);
        p.prior.lo = j.at("prior").at("lo").get<std::vector<double>>();
        p.prior.hi = j.at("prior").at("hi").get<std::vector<double>>();
        p.epsilon = j.at("epsilon").get<double>();
        p.t0 = j.value("t0", 0.0);
        p.cost_mode = parse_cost_mode(j.value("cost", std::string("wall")));
        if (j.contains("target")) cfg.target = TargetSpec::from_json(j.at("target"));
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.N = j.value("N", std::size_t{1000});
        p.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError("malformed problem config " + path.string() + ": " + e.what());
    }
}

json problem_config_json(const ABCProblem& problem, const TargetSpec& target,
                         const std::string& model_file, const std::string& data_file,
                         std::uint64_t seed, std::size_t N) {
    return {{"model", model_file},
            {"data", data_file},
            {"observation", obs_model_to_json(problem.obs_model, problem.network)},
            {"prior", {{"lo", problem.prior.lo}, {"hi", problem.prior.hi}}},
            {"epsilon", problem.epsilon},
            {"t0", problem.t0},
            {"target", target.to_json()},
            {"seed", seed},
            {"N", N},
            {"cost", to_string(problem.cost_mode)}};
}

json report_to_json(const EstimatorReport& report) {
    json levels = json::array();
    for (const auto& l : report.per_level) {
        levels.push_back({{"level", l.level},
                          {"contribution", l.contribution},
                          {"sample_count", l.sample_count},
                          {"mean_weight", l.mean_weight},
                          {"cost", l.cost}});
    }
    return {{"estimate", report.estimate},
            {"variance_estimate", report.variance_estimate},
            {"total_cost", report.total_cost},
            {"per_level", levels}};
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + cell + "'");
        }
    }
    return out;
}

}  // namespace mfmlmc

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfmlmc/abc.hpp"

namespace mfmlmc {

using json = nlohmann::json;

/// Model file schema:
///
///   {
///     "species": ["E", "S", ...],
///     "initial_state": [1000, 1000, ...],
///     "params": {"count": 3, "names": ["k1", ...], "fixed": {"0": 0.001}},
///     "reactions": [
///       {"reactants": {"E": 1, "S": 1}, "products": {"ES": 1},
///        "rate": {"type": "mass_action", "k": {"param": 0}}},
///       {"reactants": {}, "products": {"M1": 1},
///        "rate": {"type": "hill", "alpha0": 1.0, "alpha": {"param": 3},
///                 "K": {"param": 0}, "n": {"param": 1}, "repressor": "P3"}}
///     ]
///   }
///
/// "count" is the number of parameter slots; slots listed in "fixed" are
/// pinned and the remaining slots, in ascending order, form theta. Any rate
/// field is either a number or {"param": slot}. "names" is optional.
json network_to_json(const ReactionNetwork& network);
ReactionNetwork network_from_json(const json& j);

/// {"species": ["P"], "times": [20, 40], "sigma": 2.0}; species by name.
json obs_model_to_json(const ObservationModel& obs, const ReactionNetwork& network);
ObservationModel obs_model_from_json(const json& j, const ReactionNetwork& network);

/// CSV with header "time,<species>..." and one row per observation time.
void write_observations_csv(const std::filesystem::path& path, const ObservationSet& data,
                            const ObservationModel& obs, const ReactionNetwork& network);
ObservationSet read_observations_csv(const std::filesystem::path& path,
                                     const ObservationModel& obs);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

/// Posterior target selector: {"type": "mean", "index": i} or
/// {"type": "indicator", "index": i, "threshold": s}.
struct TargetSpec {
    enum class Kind { kMean, kIndicator } kind = Kind::kMean;
    std::size_t index = 0;
    double threshold = 0.0;

    [[nodiscard]] TargetFn function() const;
    [[nodiscard]] json to_json() const;
    static TargetSpec from_json(const json& j);
};

/// Problem config: model and data files (relative to the config file),
/// observation settings, prior, threshold and target.
///
///   {"model": "model.json", "data": "data.csv",
///    "observation": {...}, "prior": {"lo": [...], "hi": [...]},
///    "epsilon": 30, "t0": 0, "target": {...}, "seed": 1, "N": 1000,
///    "cost": "wall" | "draws"}
struct ProblemConfig {
    ABCProblem problem;
    TargetSpec target;
    std::uint64_t seed = 1;
    std::size_t N = 1000;
};

ProblemConfig load_problem_config(const std::filesystem::path& path);
json problem_config_json(const ABCProblem& problem, const TargetSpec& target,
                         const std::string& model_file, const std::string& data_file,
                         std::uint64_t seed, std::size_t N);

CostMode parse_cost_mode(const std::string& name);
std::string to_string(CostMode mode);

/// EstimatorReport as JSON.
json report_to_json(const EstimatorReport& report);

/// Comma-separated list of numbers.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace mfmlmc

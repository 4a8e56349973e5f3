#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfmlmc/io.hpp"
#include "mfmlmc/mf_mlmc_abc.hpp"

namespace mfmlmc {

enum class Method { kRejection, kMF, kMLMC, kMFMLMC };

Method parse_method(const std::string& name);
std::string to_string(Method method);

/// How one method is run inside a benchmark.
struct MethodSettings {
    Method method = Method::kRejection;
    /// Single-level methods: samples of the pilot run that sets N(h^2).
    std::size_t pilot = 200;
    /// MF-ABC: tau-leap step; eta is tuned adaptively from (1, 1).
    double tau = 0.1;
    /// Multilevel methods: threshold schedule ending at the problem epsilon
    /// and trial size per level.
    ThresholdSchedule schedule;
    /// MF-MLMC-ABC: one tau or one per level.
    std::vector<double> taus{0.1};
    std::size_t N0 = 100;
    MFMLMCOptions mf_options;
};

struct BenchConfig {
    ABCProblem problem;
    TargetSpec target;
    std::vector<double> h2;
    std::size_t replicates = 20;
    std::uint64_t seed = 1;
    std::vector<MethodSettings> methods;
    /// Marginal densities are taken from replicate 0 at the smallest h^2.
    std::size_t density_bins = 50;
};

/// One replicate of one method at one h^2.
struct ReplicateRecord {
    double estimate = 0.0;
    double variance_estimate = 0.0;
    double cost = 0.0;
    /// Trial cost included in cost (multilevel methods only).
    double tuning_cost = 0.0;
};

/// All replicates at one target variance.
struct BenchPoint {
    double h2 = 0.0;
    std::vector<ReplicateRecord> replicates;
    /// Sample variance of the estimates across replicates.
    double variance = 0.0;
    double mean_cost = 0.0;
};

struct DensityTable {
    std::size_t dimension = 0;
    std::vector<double> edges;
    /// One value per bin; integrates to 1 over the edges.
    std::vector<double> density;
};

struct BenchRun {
    Method method = Method::kRejection;
    std::vector<BenchPoint> points;
    std::vector<DensityTable> densities;
};

/// Runs every replicate of one method for each h^2. Replicate r at h^2
/// index k uses stream (k, r) of the config seed; replicates run
/// concurrently.
BenchRun run_benchmark(const BenchConfig& config, const MethodSettings& method);

/// V = exp(intercept) C^{-gamma}, fitted by least squares on log-log scale.
struct ConvergenceFit {
    double gamma = 0.0;
    double intercept = 0.0;
    std::vector<std::pair<double, double>> points;
};

/// points are (cost, variance) pairs, at least two, all positive.
ConvergenceFit fit_convergence(std::vector<std::pair<double, double>> points);

/// Weighted histogram of dimension `dimension` over [lo, hi] built from the
/// monotone-corrected weighted marginal CDF. Bins are right-closed, the
/// first one also contains lo.
DensityTable estimate_marginal_density(const std::vector<WeightedSample>& samples,
                                       std::size_t dimension, double lo, double hi,
                                       std::size_t bins = 50);
/// The same from an already-built marginal CDF.
DensityTable density_from_cdf(const WeightedMarginalCDF& F, std::size_t dimension, double lo,
                              double hi, std::size_t bins = 50);

/// Bench config file:
///
///   {"problem": "problem.json",
///    or "benchmark": {"id": "repressilator", "scale": "desk", "sigma": 1,
///                     "seed": 20212},
///    "epsilon": 87, "cost": "draws", "target": {...},
///    "h2": [1e-2, 4e-3, ...], "replicates": 20, "seed": 1, "bins": 50,
///    "methods": [
///      {"method": "rejection", "pilot": 200},
///      {"method": "mf", "tau": 0.2, "pilot": 200},
///      {"method": "mlmc", "epsilon_1": 130, "levels": 4, "N0": 100},
///      {"method": "mfmlmc", "epsilon_1": 130, "m": 1.5, "taus": [0.2],
///       "N0": 100, "eta_min": 0.01}]}
///
/// A level schedule is given by "epsilons", by "epsilon_1" with "levels"
/// (geometric) or "m" (fixed ratio), or by "epsilon_1" alone (default
/// ratio). Relative paths resolve against the config file.
BenchConfig load_bench_config(const std::filesystem::path& path);

/// Writes runs.csv, summary.csv, fits.json and densities.csv into dir.
void write_bench_outputs(const std::filesystem::path& dir, const BenchConfig& config,
                         const std::vector<BenchRun>& runs);

}  // namespace mfmlmc

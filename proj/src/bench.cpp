#include "mfmlmc/bench.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "mfmlmc/error.hpp"
#include "mfmlmc/models.hpp"
#include "mfmlmc/parallel.hpp"

namespace mfmlmc {

Method parse_method(const std::string& name) {
    if (name == "rejection") return Method::kRejection;
    if (name == "mf") return Method::kMF;
    if (name == "mlmc") return Method::kMLMC;
    if (name == "mfmlmc") return Method::kMFMLMC;
    throw ConfigError("unknown method '" + name + "' (expected rejection, mf, mlmc or mfmlmc)");
}

std::string to_string(Method method) {
    switch (method) {
        case Method::kRejection: return "rejection";
        case Method::kMF: return "mf";
        case Method::kMLMC: return "mlmc";
        case Method::kMFMLMC: return "mfmlmc";
    }
    return "unknown";
}

namespace {

struct Outcome {
    ReplicateRecord record;
    std::vector<DensityTable> densities;
};

MFOptions adaptive_mf_options(const MethodSettings& m) {
    MFOptions mo;
    mo.adaptive = true;
    mo.burn_in = m.mf_options.burn_in;
    mo.eta_min = m.mf_options.eta_min;
    mo.batch_size = m.mf_options.batch_size;
    return mo;
}

std::vector<DensityTable> sample_densities(const ABCProblem& p,
                                           const std::vector<WeightedSample>& samples,
                                           std::size_t bins) {
    std::vector<DensityTable> out;
    for (std::size_t j = 0; j < p.prior.dimension(); ++j) {
        out.push_back(estimate_marginal_density(samples, j, p.prior.lo[j], p.prior.hi[j], bins));
    }
    return out;
}

std::vector<DensityTable> cdf_densities(const ABCProblem& p,
                                        const std::vector<WeightedMarginalCDF>& cdfs,
                                        std::size_t bins) {
    std::vector<DensityTable> out;
    for (std::size_t j = 0; j < cdfs.size(); ++j) {
        out.push_back(density_from_cdf(cdfs[j], j, p.prior.lo[j], p.prior.hi[j], bins));
    }
    return out;
}

// Per-sample variance coefficient a with Var(fhat) ~ a / N, from a pilot run
// on its own stream. Not charged to any replicate.
double pilot_coefficient(const BenchConfig& cfg, const MethodSettings& m, const TargetFn& f) {
    const RngStream rng = RngStream(cfg.seed, 0).derive(0x70696c6f74, 0);
    if (m.pilot < 2) throw ConfigError("pilot needs at least 2 samples");
    EstimatorReport r;
    if (m.method == Method::kRejection) {
        r = abc_rejection(cfg.problem, f, m.pilot, rng).report;
    } else {
        r = mf_abc(cfg.problem, FidelityPair::for_problem(cfg.problem, m.tau),
                   adaptive_mf_options(m), f, m.pilot, rng)
                .report;
    }
    const double a = static_cast<double>(m.pilot) * r.variance_estimate;
    if (!(a > 0.0)) throw ConfigError("pilot run gave a zero variance; increase the pilot size");
    return a;
}

Outcome run_once(const BenchConfig& cfg, const MethodSettings& m, const TargetFn& f, double h2,
                 double coeff, const RngStream& rng, bool want_density) {
    Outcome out;
    const ABCProblem& p = cfg.problem;
    const std::size_t N_single =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(coeff / h2)));
    switch (m.method) {
        case Method::kRejection: {
            const RejectionResult r = abc_rejection(p, f, N_single, rng);
            out.record = {r.report.estimate, r.report.variance_estimate, r.report.total_cost, 0.0};
            if (want_density) out.densities = sample_densities(p, r.samples, cfg.density_bins);
            break;
        }
        case Method::kMF: {
            const MFResult r = mf_abc(p, FidelityPair::for_problem(p, m.tau),
                                      adaptive_mf_options(m), f, N_single, rng);
            out.record = {r.report.estimate, r.report.variance_estimate, r.report.total_cost, 0.0};
            if (want_density) out.densities = sample_densities(p, r.samples, cfg.density_bins);
            break;
        }
        case Method::kMLMC: {
            const MultilevelResult r =
                mlmc_abc_tuned(p, m.schedule, m.N0, std::sqrt(h2), std::nullopt, f, rng);
            out.record = {r.report.estimate, r.report.variance_estimate, r.report.total_cost,
                          r.tuning_cost};
            if (want_density) out.densities = cdf_densities(p, r.cdfs, cfg.density_bins);
            break;
        }
        case Method::kMFMLMC: {
            const MFMLMCResult r = mf_mlmc_abc_tuned(p, m.schedule, m.taus, m.N0, std::sqrt(h2),
                                                     std::nullopt, f, rng, m.mf_options);
            const auto& ml = r.multilevel;
            out.record = {ml.report.estimate, ml.report.variance_estimate, ml.report.total_cost,
                          ml.tuning_cost};
            if (want_density) out.densities = cdf_densities(p, ml.cdfs, cfg.density_bins);
            break;
        }
    }
    return out;
}

}  // namespace

BenchRun run_benchmark(const BenchConfig& config, const MethodSettings& method) {
    if (config.replicates < 2) throw ConfigError("need at least 2 replicates");
    if (config.h2.empty()) throw ConfigError("no target variances given");
    for (double h2 : config.h2) {
        if (!(h2 > 0.0)) throw ConfigError("target variances must be positive");
    }
    config.problem.validate();
    const TargetFn f = config.target.function();
    const bool single = method.method == Method::kRejection || method.method == Method::kMF;
    const double coeff = single ? pilot_coefficient(config, method, f) : 0.0;
    const std::size_t smallest = static_cast<std::size_t>(
        std::min_element(config.h2.begin(), config.h2.end()) - config.h2.begin());

    const std::size_t R = config.replicates;
    const std::size_t K = config.h2.size();
    std::vector<Outcome> outcomes(K * R);
    const RngStream root(config.seed, 0);
    parallel_for(K * R, [&](std::size_t i) {
        const std::size_t k = i / R;
        const std::size_t r = i % R;
        outcomes[i] = run_once(config, method, f, config.h2[k], coeff, root.derive(k, r),
                               k == smallest && r == 0);
    });

    BenchRun run;
    run.method = method.method;
    for (std::size_t k = 0; k < K; ++k) {
        BenchPoint pt;
        pt.h2 = config.h2[k];
        double sum = 0.0, cost = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            pt.replicates.push_back(outcomes[k * R + r].record);
            sum += pt.replicates.back().estimate;
            cost += pt.replicates.back().cost;
        }
        const double mean = sum / static_cast<double>(R);
        double ss = 0.0;
        for (const auto& rec : pt.replicates) ss += (rec.estimate - mean) * (rec.estimate - mean);
        pt.variance = ss / static_cast<double>(R - 1);
        pt.mean_cost = cost / static_cast<double>(R);
        run.points.push_back(std::move(pt));
    }
    run.densities = std::move(outcomes[smallest * R].densities);
    return run;
}

ConvergenceFit fit_convergence(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2) throw ConfigError("a convergence fit needs at least 2 points");
    double sx = 0.0, sy = 0.0;
    for (const auto& [c, v] : points) {
        if (!(c > 0.0) || !(v > 0.0)) {
            throw ConfigError("convergence points must have positive cost and variance");
        }
        sx += std::log(c);
        sy += std::log(v);
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [c, v] : points) {
        const double dx = std::log(c) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(v) - my);
    }
    if (!(sxx > 0.0)) throw ConfigError("convergence points need at least two distinct costs");
    const double slope = sxy / sxx;
    ConvergenceFit fit;
    fit.gamma = -slope;
    fit.intercept = my - slope * mx;
    fit.points = std::move(points);
    return fit;
}

DensityTable density_from_cdf(const WeightedMarginalCDF& F, std::size_t dimension, double lo,
                              double hi, std::size_t bins) {
    if (bins == 0 || !(hi > lo)) throw ConfigError("density needs bins >= 1 and hi > lo");
    DensityTable t;
    t.dimension = dimension;
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b <= bins; ++b) t.edges.push_back(lo + width * static_cast<double>(b));
    t.edges.back() = hi;
    // Mass outside [lo, hi] (none for prior-supported samples) is dropped
    // and the rest renormalised.
    std::vector<double> mass(bins);
    double prev = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double upper = F.eval(t.edges[b + 1]);
        mass[b] = b == 0 ? upper - F.eval(std::nextafter(lo, -INFINITY)) : upper - prev;
        prev = upper;
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (!(total > 0.0)) throw DegenerateWeightsError("no probability mass inside the bins");
    for (std::size_t b = 0; b < bins; ++b) {
        t.density.push_back(mass[b] / (total * (t.edges[b + 1] - t.edges[b])));
    }
    return t;
}

DensityTable estimate_marginal_density(const std::vector<WeightedSample>& samples,
                                       std::size_t dimension, double lo, double hi,
                                       std::size_t bins) {
    return density_from_cdf(build_marginal_cdf(samples, dimension), dimension, lo, hi, bins);
}

namespace {

ThresholdSchedule schedule_from_json(const json& m, double epsL) {
    if (m.contains("epsilons")) return {m.at("epsilons").get<std::vector<double>>()};
    if (!m.contains("epsilon_1")) throw ConfigError("multilevel methods need epsilon_1 or epsilons");
    const double eps1 = m.at("epsilon_1").get<double>();
    if (m.contains("levels")) {
        return ThresholdSchedule::geometric(eps1, epsL, m.at("levels").get<std::size_t>());
    }
    if (m.contains("m")) return ThresholdSchedule::with_scale(eps1, epsL, m.at("m").get<double>());
    return ThresholdSchedule::default_for(eps1, epsL);
}

}  // namespace

BenchConfig load_bench_config(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    BenchConfig cfg;
    try {
        if (j.contains("problem")) {
            ProblemConfig pc = load_problem_config(path.parent_path() /
                                                   j.at("problem").get<std::string>());
            cfg.problem = std::move(pc.problem);
            cfg.target = pc.target;
        } else if (j.contains("benchmark")) {
            const json& b = j.at("benchmark");
            std::optional<double> sigma;
            if (b.contains("sigma")) sigma = b.at("sigma").get<double>();
            const BenchmarkSpec spec =
                build_benchmark(parse_benchmark_id(b.at("id").get<std::string>()),
                                parse_scale(b.value("scale", std::string("desk"))), sigma);
            const auto data = generate_data(spec, b.value("seed", spec.data_seed));
            cfg.problem = make_problem(spec, data, spec.target_epsilons.back());
            cfg.target.index = spec.target_index;
        } else {
            throw ConfigError("bench config needs \"problem\" or \"benchmark\"");
        }
        if (j.contains("epsilon")) cfg.problem.epsilon = j.at("epsilon").get<double>();
        if (j.contains("cost")) cfg.problem.cost_mode = parse_cost_mode(j.at("cost"));
        if (j.contains("target")) cfg.target = TargetSpec::from_json(j.at("target"));
        cfg.h2 = j.at("h2").get<std::vector<double>>();
        cfg.replicates = j.value("replicates", std::size_t{20});
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.density_bins = j.value("bins", std::size_t{50});
        for (const json& m : j.at("methods")) {
            MethodSettings s;
            s.method = parse_method(m.at("method").get<std::string>());
            s.pilot = m.value("pilot", s.pilot);
            s.tau = m.value("tau", s.tau);
            s.N0 = m.value("N0", s.N0);
            if (m.contains("taus")) s.taus = m.at("taus").get<std::vector<double>>();
            s.mf_options.eta_min = m.value("eta_min", kDefaultEtaMin);
            if (m.contains("burn_in")) s.mf_options.burn_in = m.at("burn_in").get<std::size_t>();
            s.mf_options.batch_size = m.value("batch_size", std::size_t{0});
            if (s.method == Method::kMLMC || s.method == Method::kMFMLMC) {
                s.schedule = schedule_from_json(m, cfg.problem.epsilon);
                s.schedule.validate();
            }
            cfg.methods.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw ConfigError("malformed bench config " + path.string() + ": " + e.what());
    }
    cfg.problem.validate();
    return cfg;
}

void write_bench_outputs(const std::filesystem::path& dir, const BenchConfig& config,
                         const std::vector<BenchRun>& runs) {
    std::filesystem::create_directories(dir);
    std::ofstream rows(dir / "runs.csv");
    std::ofstream summary(dir / "summary.csv");
    std::ofstream dens(dir / "densities.csv");
    if (!rows || !summary || !dens) throw ConfigError("cannot write into " + dir.string());
    rows << std::setprecision(10);
    summary << std::setprecision(10);
    dens << std::setprecision(10);
    rows << "method,h2,replicate,estimate,variance,cost,tuning_cost\n";
    summary << "method,h2,variance,mean_cost\n";
    dens << "method,dimension,name,bin_lo,bin_hi,density\n";
    json fits = json::object();
    const auto& names = config.problem.network.slot_names();
    const auto free = config.problem.network.free_slots();
    for (const BenchRun& run : runs) {
        const std::string m = to_string(run.method);
        std::vector<std::pair<double, double>> pts;
        for (const BenchPoint& pt : run.points) {
            for (std::size_t r = 0; r < pt.replicates.size(); ++r) {
                const auto& rec = pt.replicates[r];
                rows << m << ',' << pt.h2 << ',' << r << ',' << rec.estimate << ','
                     << rec.variance_estimate << ',' << rec.cost << ',' << rec.tuning_cost << '\n';
            }
            summary << m << ',' << pt.h2 << ',' << pt.variance << ',' << pt.mean_cost << '\n';
            if (pt.variance > 0.0 && pt.mean_cost > 0.0) pts.emplace_back(pt.mean_cost, pt.variance);
        }
        if (pts.size() >= 2) {
            const ConvergenceFit fit = fit_convergence(pts);
            fits[m] = {{"gamma", fit.gamma}, {"intercept", fit.intercept}, {"points", fit.points}};
        } else {
            fits[m] = {{"gamma", nullptr}, {"points", pts}};
        }
        for (const DensityTable& t : run.densities) {
            std::string name = "theta" + std::to_string(t.dimension);
            if (t.dimension < free.size() && free[t.dimension] < names.size()) {
                name = names[free[t.dimension]];
            }
            for (std::size_t b = 0; b < t.density.size(); ++b) {
                dens << m << ',' << t.dimension << ',' << name << ',' << t.edges[b] << ','
                     << t.edges[b + 1] << ',' << t.density[b] << '\n';
            }
        }
    }
    write_json_file(dir / "fits.json", fits);
}

}  // namespace mfmlmc

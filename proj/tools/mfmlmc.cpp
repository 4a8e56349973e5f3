#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "mfmlmc/bench.hpp"
#include "mfmlmc/error.hpp"
#include "mfmlmc/io.hpp"
#include "mfmlmc/models.hpp"
#include "mfmlmc/parallel.hpp"

using namespace mfmlmc;
namespace fs = std::filesystem;

namespace {

struct SimulateArgs {
    std::string model, theta, obs_config, out;
    double t0 = 0.0;
    std::optional<double> T, tau;
    std::uint64_t seed = 1;
};

struct InferArgs {
    std::string config, method = "rejection", out;
    std::optional<std::size_t> N;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<std::string> cost;
    // mf
    std::string tau = "0.1";
    double eta1 = 1.0, eta2 = 1.0;
    bool adaptive = false;
    std::optional<std::size_t> burn_in;
    double eta_min = kDefaultEtaMin;
    // multilevel
    std::optional<double> eps1, epsL, m;
    std::optional<std::size_t> L, anchor;
    std::size_t trial_n = 100;
    std::optional<double> target_h;
};

struct TuneArgs {
    std::string config, taus, epsilons, out;
    std::optional<std::size_t> N;
    std::optional<std::uint64_t> seed;
    double eta_min = kDefaultEtaMin;
};

struct ExportArgs {
    std::string id, scale = "desk", out;
    std::optional<double> sigma;
    std::optional<std::uint64_t> seed;
};

struct BenchArgs {
    std::string config, out;
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << std::setprecision(12);
    return out;
}

int run_simulate(const SimulateArgs& a) {
    const ReactionNetwork network = network_from_json(read_json_file(a.model));
    const ParamVector theta = parse_number_list(a.theta);
    const RngStream root(a.seed, 0);
    RngStream dyn = root.derive(0, 0, Purpose::kExactDynamics);
    std::optional<ObservationModel> obs;
    if (!a.obs_config.empty()) obs = obs_model_from_json(read_json_file(a.obs_config), network);
    double T = a.T.value_or(0.0);
    if (!a.T) {
        if (!obs) throw ConfigError("--T is required without --obs-config");
        T = *std::max_element(obs->obs_times.begin(), obs->obs_times.end());
    }
    const Trajectory path = a.tau ? simulate_tau_leap(network, theta, a.t0, T, *a.tau, dyn)
                                  : simulate_exact(network, theta, a.t0, T, dyn);
    if (obs) {
        obs->validate(a.t0);
        RngStream obs_rng = root.derive(0, 0, Purpose::kExactObservation);
        write_observations_csv(a.out, observe(path, *obs, obs_rng), *obs, network);
        return 0;
    }
    std::ofstream out = open_out(a.out);
    out << "time";
    for (const auto& s : network.species_names()) out << ',' << s;
    out << '\n';
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        out << path.times[i];
        for (Count c : path.states[i]) out << ',' << c;
        out << '\n';
    }
    return 0;
}

void write_samples(const fs::path& path, const std::vector<std::vector<WeightedSample>>& levels) {
    std::ofstream out = open_out(path);
    out << "level,index,w,cost,approx_accept,exact_run,exact_accept";
    const std::size_t d = levels.empty() || levels[0].empty() ? 0 : levels[0][0].theta.size();
    for (std::size_t j = 0; j < d; ++j) out << ",theta" << j;
    out << '\n';
    for (const auto& level : levels) {
        for (const WeightedSample& s : level) {
            out << s.level << ',' << s.index << ',' << s.w << ',' << s.cost << ','
                << s.approx_accept << ',' << s.exact_run << ','
                << (s.exact_accept ? std::to_string(*s.exact_accept) : "") ;
            for (double v : s.theta) out << ',' << v;
            out << '\n';
        }
    }
}

ThresholdSchedule cli_schedule(const InferArgs& a, double epsL) {
    if (!a.eps1) throw ConfigError("--eps1 is required for multilevel methods");
    if (a.m && a.L) throw ConfigError("give --m or --L, not both");
    if (a.L) return ThresholdSchedule::geometric(*a.eps1, epsL, *a.L);
    if (a.m) return ThresholdSchedule::with_scale(*a.eps1, epsL, *a.m);
    return ThresholdSchedule::default_for(*a.eps1, epsL);
}

int run_infer(const InferArgs& a) {
    ProblemConfig cfg = load_problem_config(a.config);
    ABCProblem& p = cfg.problem;
    if (a.epsilon) p.epsilon = *a.epsilon;
    if (a.epsL) p.epsilon = *a.epsL;
    if (a.cost) p.cost_mode = parse_cost_mode(*a.cost);
    p.validate();
    const std::size_t N = a.N.value_or(cfg.N);
    const RngStream rng(a.seed.value_or(cfg.seed), 0);
    const TargetFn f = cfg.target.function();
    const Method method = parse_method(a.method);
    const fs::path out_dir = a.out.empty() ? fs::path(".") : fs::path(a.out);
    fs::create_directories(out_dir);

    json report;
    if (method == Method::kRejection) {
        const RejectionResult r = abc_rejection(p, f, N, rng);
        report = report_to_json(r.report);
        report["attempts"] = r.attempts;
        write_samples(out_dir / "samples.csv", {r.samples});
    } else if (method == Method::kMF) {
        MFOptions mo;
        mo.eta = {a.eta1, a.eta2};
        mo.adaptive = a.adaptive;
        mo.burn_in = a.burn_in;
        mo.eta_min = a.eta_min;
        const auto taus = parse_number_list(a.tau);
        if (taus.size() != 1) throw ConfigError("mf takes a single --tau");
        const MFResult r = mf_abc(p, FidelityPair::for_problem(p, taus[0]), mo, f, N, rng);
        report = report_to_json(r.report);
        report["eta"] = {r.final_eta.eta1, r.final_eta.eta2};
        write_samples(out_dir / "samples.csv", {r.samples});
    } else {
        if (!a.target_h && !a.anchor) throw ConfigError("give --target-h or --anchor-NL");
        const ThresholdSchedule schedule = cli_schedule(a, p.epsilon);
        const double h = a.target_h.value_or(0.0);
        std::ofstream levels_csv = open_out(out_dir / "levels.csv");
        std::vector<std::vector<WeightedSample>> samples;
        const MultilevelResult* ml = nullptr;
        MultilevelResult mlmc;
        MFMLMCResult mfmlmc;
        if (method == Method::kMLMC) {
            mlmc = mlmc_abc_tuned(p, schedule, a.trial_n, h, a.anchor, f, rng);
            ml = &mlmc;
            levels_csv << "level,epsilon,N,contribution,cost\n";
            for (std::size_t l = 0; l < ml->levels.size(); ++l) {
                const auto& c = ml->report.per_level[l];
                levels_csv << l + 1 << ',' << ml->levels[l].epsilon << ',' << c.sample_count << ','
                           << c.contribution << ',' << c.cost << '\n';
            }
        } else {
            MFMLMCOptions mo;
            mo.eta_min = a.eta_min;
            mo.burn_in = a.burn_in;
            mo.adaptive = a.adaptive;
            const auto taus = parse_number_list(a.tau);
            const LevelPlan plan = LevelPlan::from_schedule(schedule, taus);
            mfmlmc = mf_mlmc_abc_tuned(p, schedule, taus, a.trial_n, h, a.anchor, f, rng, mo);
            ml = &mfmlmc.multilevel;
            levels_csv << "level,epsilon,tau,N,contribution,cost,eta1,eta2,phi,mean_weight,"
                          "mean_cost\n";
            for (std::size_t l = 0; l < ml->levels.size(); ++l) {
                const auto& c = ml->report.per_level[l];
                const auto& t = mfmlmc.tuning[l];
                levels_csv << l + 1 << ',' << ml->levels[l].epsilon << ',' << plan.levels[l].tau
                           << ',' << c.sample_count << ',' << c.contribution << ',' << c.cost
                           << ',' << mfmlmc.eta[l].eta1 << ',' << mfmlmc.eta[l].eta2 << ','
                           << t.phi << ',' << t.mean_weight << ',' << t.mean_cost << '\n';
            }
        }
        report = report_to_json(ml->report);
        report["tuning_cost"] = ml->tuning_cost;
        for (const auto& lv : ml->levels) samples.push_back(lv.samples);
        write_samples(out_dir / "samples.csv", samples);
    }
    write_json_file(out_dir / "report.json", report);
    std::cout << report.dump(2) << '\n';
    return 0;
}

int run_tune(const TuneArgs& a) {
    ProblemConfig cfg = load_problem_config(a.config);
    const auto taus = parse_number_list(a.taus);
    auto epsilons = a.epsilons.empty() ? std::vector<double>{cfg.problem.epsilon}
                                       : parse_number_list(a.epsilons);
    MFMLMCOptions mo;
    mo.eta_min = a.eta_min;
    const TauSweep sweep =
        tune_tau_sequence(cfg.problem, taus, epsilons, a.N.value_or(cfg.N), cfg.target.function(),
                          RngStream(a.seed.value_or(cfg.seed), 0), mo);
    std::ofstream out = open_out(a.out);
    out << "epsilon,tau,cost,eta1,eta2\n";
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
        for (std::size_t t = 0; t < taus.size(); ++t) {
            out << epsilons[e] << ',' << taus[t] << ',' << sweep.cost[e][t] << ','
                << sweep.eta[e][t].eta1 << ',' << sweep.eta[e][t].eta2 << '\n';
        }
        std::cout << "epsilon " << epsilons[e] << ": best tau " << sweep.best_tau[e] << '\n';
    }
    std::cout << "shared tau " << sweep.shared_tau << '\n';
    return 0;
}

int run_export(const ExportArgs& a) {
    const BenchmarkSpec spec = build_benchmark(parse_benchmark_id(a.id), parse_scale(a.scale), a.sigma);
    const std::uint64_t seed = a.seed.value_or(spec.data_seed);
    const ABCProblem p =
        make_problem(spec, generate_data(spec, seed), spec.target_epsilons.back());
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_json_file(dir / "model.json", network_to_json(spec.network));
    write_observations_csv(dir / "data.csv", p.data, p.obs_model, p.network);
    TargetSpec target;
    target.index = spec.target_index;
    json cfg = problem_config_json(p, target, "model.json", "data.csv", 1, 1000);
    cfg["epsilon_1"] = spec.epsilon_1;
    cfg["target_epsilons"] = spec.target_epsilons;
    cfg["taus"] = spec.default_taus;
    write_json_file(dir / "problem.json", cfg);
    std::cout << "wrote " << spec.name << " (" << to_string(spec.scale) << ") to " << dir << '\n';
    return 0;
}

int run_bench(const BenchArgs& a) {
    const BenchConfig cfg = load_bench_config(a.config);
    std::vector<BenchRun> runs;
    for (const MethodSettings& m : cfg.methods) {
        std::cerr << "running " << to_string(m.method) << " on " << thread_count()
                  << " threads\n";
        runs.push_back(run_benchmark(cfg, m));
    }
    write_bench_outputs(a.out, cfg, runs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multifidelity multilevel ABC for stochastic reaction networks"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Simulate one path of a model");
    s->add_option("--model", sim.model, "Model JSON")->required();
    s->add_option("--theta", sim.theta, "Free parameters, comma separated")->required();
    s->add_option("--t0", sim.t0, "Start time");
    s->add_option("--T", sim.T, "End time (default: last observation time)");
    s->add_option("--seed", sim.seed);
    s->add_option("--tau", sim.tau, "Tau-leap step; exact simulation when absent");
    s->add_option("--obs-config", sim.obs_config, "Observation JSON; output observations");
    s->add_option("--out", sim.out, "Output CSV")->required();

    InferArgs inf;
    auto* i = app.add_subcommand("infer", "Estimate a posterior expectation");
    i->add_option("--config", inf.config, "Problem config JSON")->required();
    i->add_option("--method", inf.method, "rejection, mf, mlmc or mfmlmc");
    i->add_option("--out", inf.out, "Output directory");
    i->add_option("--N", inf.N, "Sample count (single-level methods)");
    i->add_option("--seed", inf.seed);
    i->add_option("--epsilon", inf.epsilon, "Threshold (overrides the config)");
    i->add_option("--cost", inf.cost, "Cost unit: wall or draws");
    i->add_option("--tau", inf.tau, "Tau-leap step; comma list per level for mfmlmc");
    i->add_option("--eta1", inf.eta1);
    i->add_option("--eta2", inf.eta2);
    i->add_flag("--adaptive", inf.adaptive, "Tune eta on the fly");
    i->add_option("--burn-in", inf.burn_in);
    i->add_option("--eta-min", inf.eta_min);
    i->add_option("--eps1", inf.eps1, "Largest threshold");
    i->add_option("--epsL", inf.epsL, "Smallest threshold (default: config epsilon)");
    i->add_option("--m", inf.m, "Threshold ratio between levels");
    i->add_option("--L", inf.L, "Number of levels");
    i->add_option("--trial-n", inf.trial_n, "Trial samples per level");
    i->add_option("--target-h", inf.target_h, "Target standard deviation");
    i->add_option("--anchor-NL", inf.anchor, "Sample count at the last level");

    TuneArgs tune;
    auto* t = app.add_subcommand("tune", "Sweep tau for adaptive MF-ABC");
    t->add_option("--config", tune.config, "Problem config JSON")->required();
    t->add_option("--taus", tune.taus, "Comma separated tau values")->required();
    t->add_option("--epsilons", tune.epsilons, "Comma separated thresholds");
    t->add_option("--N", tune.N);
    t->add_option("--seed", tune.seed);
    t->add_option("--eta-min", tune.eta_min);
    t->add_option("--out", tune.out, "Output CSV")->required();

    ExportArgs ex;
    auto* models = app.add_subcommand("models", "Built-in benchmark models");
    models->require_subcommand(1);
    auto* e = models->add_subcommand("export", "Write model, data and problem config");
    e->add_option("--id", ex.id, "michaelis_menten, repressilator or mapk2")->required();
    e->add_option("--scale", ex.scale, "paper or desk");
    e->add_option("--sigma", ex.sigma, "Observation noise");
    e->add_option("--seed", ex.seed, "Data seed");
    e->add_option("--out", ex.out, "Output directory")->required();

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Compare methods over target variances");
    b->add_option("--config", bench.config, "Bench config JSON")->required();
    b->add_option("--out", bench.out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (s->parsed()) return run_simulate(sim);
        if (i->parsed()) return run_infer(inf);
        if (t->parsed()) return run_tune(tune);
        if (e->parsed()) return run_export(ex);
        if (b->parsed()) return run_bench(bench);
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "mfmlmc/error.hpp"
#include "mfmlmc/io.hpp"
#include "mfmlmc/models.hpp"

using namespace mfmlmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("mfmlmc_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

double fixed_slot(const BenchmarkSpec& s, std::size_t slot) { return s.network.slots()[slot].value(); }

}  // namespace

TEST_SUITE("models") {

TEST_CASE("michaelis-menten at full scale") {
    BenchmarkSpec s = build_benchmark(BenchmarkId::kMichaelisMenten, Scale::kPaper);
    CHECK(s.network.initial_state() == std::vector<Count>{1000, 1000, 0, 0});
    CHECK(s.truth == ParamVector{0.001, 0.005, 0.01});
    CHECK(s.obs_model.obs_times == std::vector<double>{20, 40, 60, 80});
    CHECK(s.obs_model.sigma == 2.0);
    CHECK(s.obs_model.observed_indices == std::vector<std::size_t>{3});
    CHECK(s.prior.lo == std::vector<double>{0, 0, 0});
    CHECK(s.prior.hi == std::vector<double>{0.003, 0.0015, 0.05});
    CHECK(build_benchmark(BenchmarkId::kMichaelisMenten, Scale::kPaper, 10.0).obs_model.sigma == 10.0);
    BenchmarkSpec d = build_benchmark(BenchmarkId::kMichaelisMenten, Scale::kDesk);
    CHECK(d.network.initial_state() == std::vector<Count>{100, 100, 0, 0});
    CHECK(d.prior.hi == s.prior.hi);
}

TEST_CASE("repressilator at full scale") {
    BenchmarkSpec s = build_benchmark(BenchmarkId::kRepressilator, Scale::kPaper);
    CHECK(s.network.initial_state() == std::vector<Count>{0, 0, 0, 40, 20, 60});
    CHECK(s.truth == ParamVector{20.0, 2.0});
    CHECK(fixed_slot(s, 2) == 1.0);
    CHECK(fixed_slot(s, 3) == 1000.0);
    CHECK(fixed_slot(s, 4) == 5.0);
    CHECK(fixed_slot(s, 5) == 1.0);
    CHECK(s.obs_model.sigma == 10.0);
    CHECK(s.obs_model.obs_times.size() == 10);
    CHECK(s.obs_model.obs_times.back() == 10.0);
    CHECK(s.obs_model.observed_indices == std::vector<std::size_t>{3, 4, 5});
    CHECK(s.prior.lo == std::vector<double>{10.0, 1.0});
    CHECK(s.prior.hi == std::vector<double>{30.0, 4.0});
    CHECK(s.network.reaction_count() == 12);
}

TEST_CASE("two-step MAPK at full scale") {
    BenchmarkSpec s = build_benchmark(BenchmarkId::kMapk2, Scale::kPaper);
    CHECK(s.network.reaction_count() == 12);
    const auto& x0 = s.network.initial_state();
    CHECK(x0[0] == 94);
    CHECK(x0[1] == 757);
    CHECK(x0[6] == 567);
    CHECK(x0[4] == 32);
    CHECK(x0[9] == 32);
    CHECK(x0[2] + x0[3] + x0[5] + x0[7] + x0[8] + x0[10] == 0);
    CHECK(s.truth.size() == 8);
    CHECK(s.truth[0] == doctest::Approx(0.001 / 120));
    CHECK(s.truth[1] == 0.18);
    CHECK(s.truth[2] == doctest::Approx(0.001 / 22));
    CHECK(s.truth[4] == doctest::Approx(0.0001 / 110));
    CHECK(fixed_slot(s, 6) == 0.0001);
    CHECK(s.obs_model.obs_times.size() == 50);
    CHECK(s.obs_model.obs_times.back() == 200.0);
    CHECK(s.obs_model.sigma == 10.0);
}

TEST_CASE("unknown names") {
    CHECK_THROWS_AS(parse_benchmark_id("lotka"), ConfigError);
    CHECK_THROWS_AS(parse_scale("huge"), ConfigError);
    CHECK(parse_benchmark_id(to_string(BenchmarkId::kMapk2)) == BenchmarkId::kMapk2);
}

TEST_CASE("data generation") {
    BenchmarkSpec s = build_benchmark(BenchmarkId::kMichaelisMenten, Scale::kDesk);
    CHECK(generate_data(s, 5) == generate_data(s, 5));
    CHECK_FALSE(generate_data(s, 5) == generate_data(s, 6));
    BenchmarkSpec quiet = build_benchmark(BenchmarkId::kMichaelisMenten, Scale::kDesk, 1e-12);
    ObservationSet d = generate_data(quiet, 5);
    ObservationSet noisy = generate_data(s, 5);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        CHECK(std::abs(d(r, 0) - std::round(d(r, 0))) < 1e-6);
        CHECK(d(r, 0) >= 0.0);
        CHECK(d(r, 0) <= 100.0);
        // Noise is drawn on its own stream, so the path is shared.
        CHECK(std::abs(noisy(r, 0) - d(r, 0)) < 12.0);
    }
}

TEST_CASE("generating path conserves enzyme") {
    BenchmarkSpec s = build_benchmark(BenchmarkId::kMichaelisMenten, Scale::kPaper);
    RngStream rng(20211, 0);
    Trajectory tr = simulate_exact(s.network, s.truth, 0.0, 80.0, rng);
    for (const auto& x : tr.states) CHECK(x[0] + x[2] == 1000);
}

TEST_CASE("model file round trip") {
    BenchmarkSpec s = build_benchmark(BenchmarkId::kRepressilator, Scale::kPaper);
    const json j = network_to_json(s.network);
    CHECK(j.at("reactions").at(0).at("rate").at("type") == "hill");
    CHECK(j.at("reactions").at(0).at("rate").at("repressor") == "P3");
    CHECK(network_from_json(j) == s.network);
    CHECK(obs_model_from_json(obs_model_to_json(s.obs_model, s.network), s.network).obs_times ==
          s.obs_model.obs_times);
}

TEST_CASE("malformed model files") {
    json j = network_to_json(testing::birth());
    json bad = j;
    bad["reactions"][0]["products"] = {{"Y", 1}};
    CHECK_THROWS_AS(network_from_json(bad), ConfigError);
    bad = j;
    bad["reactions"][0]["rate"]["type"] = "michaelis";
    CHECK_THROWS_AS(network_from_json(bad), ConfigError);
    bad = j;
    bad.erase("species");
    CHECK_THROWS_AS(network_from_json(bad), ConfigError);
}

TEST_CASE("observation csv round trip") {
    const fs::path dir = scratch_dir("obs_csv");
    BenchmarkSpec s = build_benchmark(BenchmarkId::kRepressilator, Scale::kDesk);
    ObservationSet d = generate_data(s, 3);
    write_observations_csv(dir / "data.csv", d, s.obs_model, s.network);
    std::ifstream in(dir / "data.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "time,P1,P2,P3");
    CHECK(read_observations_csv(dir / "data.csv", s.obs_model) == d);
}

TEST_CASE("problem config round trip") {
    const fs::path dir = scratch_dir("problem");
    BenchmarkSpec s = build_benchmark(BenchmarkId::kMichaelisMenten, Scale::kDesk);
    ABCProblem p = make_problem(s, generate_data(s, s.data_seed), 30.0, CostMode::kDrawCount);
    write_json_file(dir / "model.json", network_to_json(p.network));
    write_observations_csv(dir / "data.csv", p.data, p.obs_model, p.network);
    TargetSpec t{TargetSpec::Kind::kIndicator, 2, 0.01};
    write_json_file(dir / "problem.json", problem_config_json(p, t, "model.json", "data.csv", 9, 123));
    ProblemConfig c = load_problem_config(dir / "problem.json");
    CHECK(c.problem.network == p.network);
    CHECK(c.problem.data == p.data);
    CHECK(c.problem.prior.hi == p.prior.hi);
    CHECK(c.problem.epsilon == 30.0);
    CHECK(c.problem.cost_mode == CostMode::kDrawCount);
    CHECK(c.target.kind == TargetSpec::Kind::kIndicator);
    CHECK(c.target.threshold == 0.01);
    CHECK(c.seed == 9);
    CHECK(c.N == 123);
}

TEST_CASE("config helpers") {
    CHECK(parse_number_list("0.1,2,3e-2") == std::vector<double>{0.1, 2.0, 0.03});
    CHECK_THROWS_AS(parse_number_list("0.1,x"), ConfigError);
    CHECK(parse_cost_mode("draws") == CostMode::kDrawCount);
    CHECK_THROWS_AS(parse_cost_mode("cycles"), ConfigError);
    CHECK_THROWS_AS(TargetSpec::from_json(json{{"type", "median"}, {"index", 0}}), ConfigError);
    const fs::path dir = scratch_dir("broken");
    std::ofstream(dir / "x.json") << "{ not json";
    CHECK_THROWS_AS(read_json_file(dir / "x.json"), ConfigError);
    CHECK_THROWS_AS(read_json_file(dir / "missing.json"), ConfigError);
}

}

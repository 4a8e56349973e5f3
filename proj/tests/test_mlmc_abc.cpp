#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mfmlmc/error.hpp"
#include "mfmlmc/mlmc_abc.hpp"
#include "mfmlmc/models.hpp"

using namespace mfmlmc;

namespace {

WeightedSample ws(double theta, double w) {
    WeightedSample s;
    s.theta = {theta};
    s.w = w;
    return s;
}

ABCProblem mm_desk(double epsilon) {
    BenchmarkSpec spec = build_benchmark(BenchmarkId::kMichaelisMenten, Scale::kDesk);
    return make_problem(spec, generate_data(spec, spec.data_seed), epsilon, CostMode::kDrawCount);
}

}  // namespace

TEST_SUITE("mlmc_abc") {

TEST_CASE("schedules") {
    ThresholdSchedule g = ThresholdSchedule::geometric(160.0, 20.0, 4);
    CHECK(g.epsilons.size() == 4);
    CHECK(g.epsilons[1] == doctest::Approx(80.0));
    CHECK(g.scale_factor() == doctest::Approx(2.0));
    ThresholdSchedule m = ThresholdSchedule::with_scale(160.0, 30.0, 2.0);
    CHECK(m.epsilons == std::vector<double>{160.0, 80.0, 40.0, 30.0});
    ThresholdSchedule d = ThresholdSchedule::default_for(160.0, 30.0);
    CHECK(d.scale_factor() <= 2.0);
    CHECK(d.scale_factor() >= 1.5);
    CHECK_THROWS_AS((ThresholdSchedule{{30.0, 30.0}}.validate()), ConfigError);
    CHECK_THROWS_AS((ThresholdSchedule{{30.0, 40.0}}.validate()), ConfigError);
}

TEST_CASE("couple_down quantile matching") {
    std::vector<WeightedSample> lvl{ws(2.0, 1.0), ws(1.0, 1.0), ws(3.0, 1.0)};
    const std::vector<double> prev{10.0, 30.0, 20.0}, w{1.0, 1.0, 1.0};
    std::vector<ParamVector> c = couple_down(lvl, {WeightedMarginalCDF::from_weighted(prev, w)});
    CHECK(c[0][0] == 20.0);
    CHECK(c[1][0] == 10.0);
    CHECK(c[2][0] == 30.0);
}

TEST_CASE("couple_down onto the same sample set is the identity") {
    RngStream rng(1, 0);
    std::vector<WeightedSample> lvl;
    std::vector<double> x, w;
    for (int i = 0; i < 50; ++i) {
        lvl.push_back(ws(rng.uniform(), 1.0 + rng.uniform()));
        x.push_back(lvl.back().theta[0]);
        w.push_back(lvl.back().w);
    }
    std::vector<ParamVector> c = couple_down(lvl, {WeightedMarginalCDF::from_weighted(x, w)});
    for (std::size_t i = 0; i < lvl.size(); ++i) CHECK(c[i][0] == lvl[i].theta[0]);
}

TEST_CASE("coupling is monotone") {
    RngStream rng(2, 0);
    std::vector<WeightedSample> lvl;
    std::vector<double> prev, ones;
    for (int i = 0; i < 40; ++i) {
        lvl.push_back(ws(rng.uniform(), 1.0));
        prev.push_back(5.0 * rng.uniform());
        ones.push_back(1.0);
    }
    std::vector<ParamVector> c = couple_down(lvl, {WeightedMarginalCDF::from_weighted(prev, ones)});
    for (std::size_t i = 0; i < lvl.size(); ++i)
        for (std::size_t j = 0; j < lvl.size(); ++j)
            if (lvl[i].theta[0] < lvl[j].theta[0]) CHECK(c[i][0] <= c[j][0]);
}

TEST_CASE("single level is rejection") {
    ABCProblem p = testing::birth_problem();
    RejectionResult rej = abc_rejection(p, component_mean(0), 60, RngStream(3, 0));
    MultilevelResult ml = mlmc_abc(p, {{p.epsilon}}, {60}, component_mean(0), RngStream(3, 0));
    CHECK(ml.report.estimate == rej.report.estimate);
    CHECK(ml.report.total_cost == rej.report.total_cost);
}

TEST_CASE("invalid multilevel configuration") {
    ABCProblem p = testing::birth_problem();
    CHECK_THROWS_AS(mlmc_abc(p, {{5.5, 5.5}}, {10, 10}, component_mean(0), RngStream(1, 0)),
                    ConfigError);
    CHECK_THROWS_AS(mlmc_abc(p, {{8.5, 5.5}}, {10}, component_mean(0), RngStream(1, 0)),
                    ConfigError);
    CHECK_THROWS_AS(mlmc_abc(p, {{8.5, 5.5}}, {10, 1}, component_mean(0), RngStream(1, 0)),
                    ConfigError);
}

TEST_CASE("allocation") {
    CHECK(optimal_allocation({{4.0, 1.0}, {1.0, 4.0}}, 1.0) == std::vector<std::size_t>{8, 2});
    CHECK(optimal_allocation({{4.0, 1.0}, {1.0, 4.0}}, 1.0, 16) ==
          std::vector<std::size_t>{64, 16});
    const auto eq = optimal_allocation({{2.0, 3.0}, {2.0, 3.0}, {2.0, 3.0}}, 0.1);
    CHECK(eq[0] == eq[1]);
    CHECK(eq[1] == eq[2]);
    CHECK(optimal_allocation({{1e-6, 1.0}}, 1.0) == std::vector<std::size_t>{2});
    CHECK_THROWS_AS(optimal_allocation({{0.0, 1.0}, {1.0, 1.0}}, 1.0), AllocationError);
    CHECK_THROWS_AS(optimal_allocation({{1.0, 0.0}}, 1.0), AllocationError);
}

TEST_CASE("level statistics") {
    ABCProblem p = mm_desk(20.0);
    const ThresholdSchedule s{{60.0, 40.0, 20.0}};
    const TargetFn f = component_mean(2);
    TrialStats a = estimate_level_stats(p, s, 100, f, RngStream(4, 0));
    TrialStats b = estimate_level_stats(p, s, 100, f, RngStream(4, 0));
    REQUIRE(a.stats.size() == 3);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(a.stats[l].v == b.stats[l].v);
        CHECK(a.stats[l].c == b.stats[l].c);
    }
    CHECK(a.stats[0].c < a.stats[1].c);
    CHECK(a.stats[1].c < a.stats[2].c);

    MultilevelResult ml = mlmc_abc(p, s, {100, 100, 100}, f, RngStream(4, 0));
    std::vector<double> g1(ml.levels[0].g.begin(), ml.levels[0].g.end());
    CHECK(a.stats[0].v == doctest::Approx(testing::variance(g1)));
}

TEST_CASE("tuned run charges the trial") {
    ABCProblem p = mm_desk(30.0);
    MultilevelResult r = mlmc_abc_tuned(p, {{60.0, 30.0}}, 50, 0.0, 16, component_mean(2),
                                        RngStream(5, 0));
    CHECK(r.tuning_cost > 0.0);
    double level_cost = 0.0;
    for (const auto& l : r.levels) level_cost += l.cost;
    CHECK(r.report.total_cost == doctest::Approx(level_cost + r.tuning_cost));
    CHECK(r.levels.back().samples.size() == 16);
}

TEST_CASE("multilevel estimate agrees with rejection on michaelis-menten" * doctest::timeout(600)) {
    ABCProblem p = mm_desk(20.0);
    const TargetFn f = component_mean(2);
    const ThresholdSchedule s = ThresholdSchedule::default_for(160.0, 20.0);
    std::vector<double> ml(20), rej(20);
    for (std::size_t r = 0; r < 20; ++r) {
        ml[r] = mlmc_abc(p, s, std::vector<std::size_t>(s.levels(), 200), f, RngStream(40, r))
                    .report.estimate;
        rej[r] = abc_rejection(p, f, 200, RngStream(41, r)).report.estimate;
    }
    const double se = std::hypot(testing::std_error(ml), testing::std_error(rej));
    MESSAGE("mlmc " << testing::mean(ml) << " rejection " << testing::mean(rej) << " se " << se);
    CHECK(std::abs(testing::mean(ml) - testing::mean(rej)) <= 3.0 * se);
}

}

#include <gtest/gtest.h>

#include "qsga/experiments.hpp"

using namespace qsga;

namespace {

RunConfig small_config(const std::string& text) { return parse_run_config(json::parse(text)); }

const char* kDisordered = R"({
  "engine": {"ell": 12, "m": 12, "p_C": 0.0, "pi": 0.8, "seed": 3, "horizon": 40},
  "scheme": {"kind": "tournament", "t": 2},
  "landscape": {"kind": "sharp-peak"},
  "scenario": {"name": "disordered", "trials": 40, "sweep": {"key": "pi", "values": [0.6, 0.9]}}
})";

const char* kPersistence = R"({
  "engine": {"m": 6, "p_C": 0.0, "pi": 1.05, "seed": 5},
  "scheme": {"kind": "tournament", "t": 2},
  "scenario": {"name": "auxchain-persistence", "trials": 30, "cap": 100000, "sweep": {"key": "m", "values": [4, 6, 8]}}
})";

/// Summary with the fields that are not derived from the trial table removed.
json table_part(json s) {
    for (const char* k : {"scenario", "master_seed", "trials_per_point", "config", "wall_time_seconds", "cap", "margin",
                          "window"})
        s.erase(k);
    return s;
}

} // namespace

TEST(Stats, Basics) {
    EXPECT_EQ(stats::mean({1.0, 2.0, 6.0}), 3.0);
    EXPECT_EQ(stats::median({5.0, 1.0, 3.0, 2.0}), 2.5);
    EXPECT_TRUE(std::isnan(stats::mean({})));
    const auto [lo, hi] = stats::wilson(50, 100);
    EXPECT_NEAR(lo, 0.4038, 1e-4);
    EXPECT_NEAR(hi, 0.5962, 1e-4);
    const auto [z0, z1] = stats::wilson(0, 10);
    EXPECT_EQ(z0, 0.0);
    EXPECT_GT(z1, 0.0);
}

TEST(Stats, OrdinaryLeastSquares) {
    const auto exact = stats::ols({1, 2, 3, 4}, {3, 5, 7, 9});
    EXPECT_NEAR(exact.slope, 2.0, 1e-14);
    EXPECT_NEAR(exact.intercept, 1.0, 1e-14);
    EXPECT_NEAR(exact.stderr_slope, 0.0, 1e-14);
    // Residuals (+1, -1, -1, +1) around y = x: rss 4, sxx 5, se = sqrt(4 / 2 / 5).
    const auto noisy = stats::ols({1, 2, 3, 4}, {2, 1, 2, 5});
    EXPECT_NEAR(noisy.slope, 1.0, 1e-14);
    EXPECT_NEAR(noisy.stderr_slope, std::sqrt(0.4), 1e-14);
    EXPECT_TRUE(std::isnan(stats::ols({1, 2}, {1, 2}).slope));
}

TEST(Csv, RoundTrip) {
    TrialTable t;
    t.columns = {"a", "b"};
    t.rows.push_back({0, 123, 0, {0.1, kMissing}});
    t.rows.push_back({1, 18446744073709551615ULL, 1, {1.0 / 3.0, 1e300}});
    std::string scenario;
    const auto text = to_csv("demo", t);
    EXPECT_EQ(text.substr(0, text.find('\n')), "scenario,trial,seed,point,a,b");
    const auto back = parse_csv(text, &scenario);
    EXPECT_EQ(scenario, "demo");
    ASSERT_EQ(back.rows.size(), 2U);
    EXPECT_EQ(back.rows[1].seed, 18446744073709551615ULL);
    EXPECT_EQ(back.rows[1].values[0], 1.0 / 3.0);
    EXPECT_TRUE(std::isnan(back.rows[0].values[1]));
    EXPECT_EQ(to_csv("demo", back), text);
}

TEST(ParallelFor, VisitsEveryIndexAndPropagatesErrors) {
    std::vector<int> hit(1000, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }),
                 std::runtime_error);
}

TEST(Scenario, GatesRejectWrongRegime) {
    auto rc = small_config(kDisordered);
    rc.scenario["sweep"]["values"] = {0.8, 1.2};
    EXPECT_THROW(run_scenario(rc), config_error);
    auto q = small_config(kDisordered);
    q.scenario.erase("sweep");
    EXPECT_THROW(run_scenario(q, {}, "quasispecies"), config_error);
    EXPECT_THROW(run_scenario(q, {}, "catastrophe"), config_error);
    EXPECT_THROW(run_scenario(q, {}, "no-such-scenario"), config_error);
    auto h = small_config(R"({"engine": {"ell": 2, "m": 2, "p_M": 0.1},
                              "landscape": {"kind": "custom-table", "table": {"11": 2.0}}})");
    EXPECT_THROW(run_scenario(h, {}, "hitting-time"), config_error);
    auto a = small_config(R"({"engine": {"m": 10, "pi": 0.9}})");
    EXPECT_THROW(run_scenario(a, {}, "auxchain-equilibrium"), config_error);
}

TEST(Scenario, ByteIdenticalAcrossWorkerCounts) {
    for (const char* text : {kDisordered, kPersistence}) {
        const auto rc = small_config(text);
        RunOptions one, four;
        four.workers = 4;
        const auto a = run_scenario(rc, one), b = run_scenario(rc, four), c = run_scenario(rc, one);
        EXPECT_EQ(to_csv(a.scenario, a.table), to_csv(b.scenario, b.table));
        EXPECT_EQ(to_csv(a.scenario, a.table), to_csv(c.scenario, c.table));
        EXPECT_EQ(table_part(a.summary), table_part(b.summary));
    }
}

TEST(Scenario, SummaryRecomputesFromCsv) {
    const auto rc = small_config(kDisordered);
    const auto r = run_scenario(rc);
    const auto table = parse_csv(to_csv(r.scenario, r.table));
    const auto points = detail::expand_points(rc, false);
    EXPECT_EQ(table_part(r.summary), summarize_disordered(points, table, rc.scenario));

    const auto ra = small_config(kPersistence);
    const auto p = run_scenario(ra);
    const auto pt = detail::expand_points(ra, true);
    EXPECT_EQ(table_part(p.summary), summarize_persistence(pt, parse_csv(to_csv(p.scenario, p.table))));
}

TEST(Scenario, SeedsFollowDerivation) {
    const auto r = run_scenario(small_config(kDisordered));
    ASSERT_EQ(r.table.rows.size(), 80U);
    for (const auto& row : r.table.rows) {
        EXPECT_EQ(row.seed, derive_seed(3, row.trial, "disordered"));
        EXPECT_EQ(row.point, row.trial / 40);
    }
    RunOptions opt;
    opt.seed = 4;
    EXPECT_NE(to_csv("d", run_scenario(small_config(kDisordered), opt).table), to_csv("d", r.table));
}

TEST(Scenario, ConstantLandscapeNeverLosesLevel) {
    auto rc = small_config(R"({
      "engine": {"ell": 8, "m": 8, "p_C": 0.1, "pi": 1.5, "seed": 1, "horizon": 200},
      "scheme": {"kind": "tournament", "t": 2},
      "landscape": {"kind": "custom-table", "fallback": 1.0},
      "scenario": {"trials": 20}
    })");
    const auto q = run_scenario(rc, {}, "quasispecies");
    EXPECT_EQ(q.summary["points"][0]["survival_frequency"].get<double>(), 1.0);
    const auto c = run_scenario(rc, {}, "catastrophe");
    EXPECT_EQ(c.summary["points"][0]["catastrophes"].get<std::size_t>(), 0U);
}

TEST(Scenario, StartAtOptimumHitsAtFirstGeneration) {
    auto rc = small_config(R"({
      "engine": {"ell": 10, "m": 10, "p_M": 0.001, "p_C": 0.0, "seed": 2, "horizon": 50},
      "scheme": {"kind": "tournament", "t": 2},
      "landscape": {"kind": "one-max"},
      "scenario": {"trials": 200, "start": "all-master"}
    })");
    const auto r = run_scenario(rc, {}, "hitting-time");
    const auto tau = r.table.values("tau_star", 0);
    const auto ones = std::count(tau.begin(), tau.end(), 1.0);
    EXPECT_GE(double(ones) / double(tau.size()), 0.99);
    EXPECT_EQ(*std::min_element(tau.begin(), tau.end()), 1.0);
}

TEST(Scenario, DisorderedExtinctionRecorded) {
    const auto r = run_scenario(small_config(kDisordered));
    const auto ext = r.table.values("extinction_generation", 0);
    const auto flag = r.table.values("extinct", 0);
    for (std::size_t i = 0; i < ext.size(); ++i) {
        EXPECT_EQ(std::isnan(ext[i]), flag[i] == 0.0);
        if (!std::isnan(ext[i])) EXPECT_GE(ext[i], 1.0);
    }
    EXPECT_TRUE(r.summary.contains("extinct_fraction_non_increasing_in_pi"));
}

TEST(Scenario, EquilibriumNearFixedPoint) {
    auto rc = small_config(R"({
      "engine": {"m": 400, "p_C": 0.1, "pi": 1.6, "seed": 6},
      "scheme": {"kind": "tournament", "t": 2},
      "scenario": {"trials": 4, "window": 5000}
    })");
    const auto r = run_scenario(rc, {}, "auxchain-equilibrium");
    EXPECT_NEAR(r.summary["points"][0]["quasi_stationary_mean"].get<double>(), 0.75, 0.05);
}

TEST(Scenario, StationaryTinyOccupation) {
    auto rc = small_config(R"({
      "engine": {"ell": 1, "m": 2, "p_M": 0.2, "p_C": 0.0, "seed": 8, "horizon": 200000},
      "scheme": {"kind": "tournament", "t": 2},
      "landscape": {"kind": "sharp-peak"},
      "scenario": {"trials": 2}
    })");
    const auto r = run_scenario(rc, {}, "stationary-tiny");
    EXPECT_LT(r.summary["points"][0]["max_l1_error"].get<double>(), 0.02);
}

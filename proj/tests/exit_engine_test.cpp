#include <gtest/gtest.h>

#include <random>

#include "eesim/errors.hpp"
#include "eesim/exit_engine.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace eesim;
using namespace eesim::testing;

namespace {

struct Env {
  ModelProfile profile = chain_profile({2.0, 3.0, 4.0, 5.0, 6.0}, 0.25);
  std::vector<RampSite> sites = find_feasible_sites(profile);
};

}  // namespace

TEST(ExitEngine, ExitsAtFirstRampStrictlyBelowThreshold) {
  Env s;
  const auto cfg = make_config(s.sites, {0, 2}, {0.3, 0.5});
  auto r = make_record(1, 0, {{"L0", {0.3, 4}}, {"L1", {0.0, 4}}, {"L2", {0.49, 5}}, {"L3", {0.0, 4}}}, 4);
  const auto out = evaluate_record(r, cfg, s.profile, 1);
  ASSERT_TRUE(out.exit_site);
  EXPECT_EQ(*out.exit_site, "L2");
  EXPECT_EQ(*out.exit_ramp, 1u);
  EXPECT_EQ(out.released_label, 5);
  EXPECT_FALSE(out.correct);
  EXPECT_DOUBLE_EQ(out.serve_ms, 2.0 + 3.0 + 4.0 + 0.5);
}

TEST(ExitEngine, NoExitRunsFullModelPlusAllRamps) {
  Env s;
  const auto cfg = make_config(s.sites, {0, 1, 3}, {0.0, 0.0, 0.0});
  auto r = make_record(1, 0, {{"L0", {0.0, 1}}, {"L1", {0.0, 1}}, {"L2", {0.0, 1}}, {"L3", {0.0, 1}}}, 9);
  const auto out = evaluate_record(r, cfg, s.profile, 1);
  EXPECT_FALSE(out.exit_site);
  EXPECT_TRUE(out.correct);
  EXPECT_EQ(out.released_label, 9);
  EXPECT_DOUBLE_EQ(out.serve_ms, 20.0 + 0.75);
}

TEST(ExitEngine, EmptyConfigIsVanilla) {
  Env s;
  auto r = make_record(1, 0, {{"L0", {0.0, 1}}, {"L1", {0.0, 1}}, {"L2", {0.0, 1}}, {"L3", {0.0, 1}}}, 1);
  const auto out = evaluate_record(r, EEConfig{}, s.profile, 1);
  EXPECT_DOUBLE_EQ(out.serve_ms, 20.0);
}

TEST(ExitEngine, MatchesExitRuleOracle) {
  Env s;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> which;
    for (std::size_t i = 0; i < s.sites.size(); ++i)
      if (u(rng) < 0.6) which.push_back(i);
    std::vector<double> thr;
    for (std::size_t k = 0; k < which.size(); ++k) thr.push_back(std::round(u(rng) * 10) / 10);
    const auto cfg = make_config(s.sites, which, thr);
    std::vector<LayerId> layers;
    std::vector<double> prefix, ramp;
    for (auto i : which) {
      layers.push_back(s.sites[i].layer);
      prefix.push_back(s.sites[i].prefix_ms(1));
      ramp.push_back(s.sites[i].ramp_ms(1));
    }
    for (const auto& rec : random_records(s.sites, 20, 0.6, rng)) {
      const auto got = evaluate_record(rec, cfg, s.profile, 1);
      const auto want = oracle::exit_rule(rec, layers, thr, prefix, ramp, 20.0);
      EXPECT_EQ(got.exit_ramp, want.ramp);
      EXPECT_EQ(got.correct, want.correct);
      EXPECT_NEAR(got.serve_ms, want.serve_ms, 1e-12);
    }
  }
}

TEST(ExitEngine, UsesBatchSizedLatencies) {
  const auto p = batched_chain_profile(4, 1.0, 0.1, 0.5, 0.2);
  const auto sites = find_feasible_sites(p);
  const auto cfg = make_config(sites, {1}, {0.5});
  auto r = make_record(1, 0, {{"L0", {0.9, 1}}, {"L1", {0.1, 1}}, {"L2", {0.9, 1}}}, 1);
  const auto out = evaluate_record(r, cfg, p, 8);
  EXPECT_NEAR(out.serve_ms, 2.0 * (1.0 + 7.0 * 0.5) + 0.1 * (1.0 + 7.0 * 0.2), 1e-12);
}

TEST(ExitEngine, ScoreAveragingOverLastK) {
  Env s;
  const auto cfg = make_config(s.sites, {0, 1, 2}, {0.3, 0.3, 0.3});
  auto r = make_record(1, 0, {{"L0", {0.5, 1}}, {"L1", {0.05, 1}}, {"L2", {0.2, 1}}, {"L3", {0.9, 1}}}, 1);
  EXPECT_EQ(*evaluate_record(r, cfg, s.profile, 1, 1).exit_site, "L1");
  // k = 2 scores: 0.5, 0.275
  EXPECT_EQ(*evaluate_record(r, cfg, s.profile, 1, 2).exit_site, "L1");
  auto r2 = r;
  r2.ramps["L1"].err = 0.15;  // k = 2 scores: 0.5, 0.325, 0.175
  EXPECT_EQ(*evaluate_record(r2, cfg, s.profile, 1, 2).exit_site, "L2");
  EXPECT_EQ(*evaluate_record(r2, cfg, s.profile, 1, 1).exit_site, "L1");
}

TEST(ExitEngine, WindowAccuracyAndSavings) {
  Env s;
  const auto cfg = make_config(s.sites, {1}, {0.5});
  std::vector<RequestRecord> w{
      make_record(0, 0, {{"L0", {1, 1}}, {"L1", {0.1, 1}}, {"L2", {1, 1}}, {"L3", {1, 1}}}, 1),
      make_record(1, 0, {{"L0", {1, 1}}, {"L1", {0.1, 2}}, {"L2", {1, 1}}, {"L3", {1, 1}}}, 1),
      make_record(2, 0, {{"L0", {1, 1}}, {"L1", {0.9, 1}}, {"L2", {1, 1}}, {"L3", {1, 1}}}, 1),
      make_record(3, 0, {{"L0", {1, 1}}, {"L1", {0.9, 1}}, {"L2", {1, 1}}, {"L3", {1, 1}}}, 1)};
  const auto res = evaluate_window(w, cfg, s.profile);
  EXPECT_DOUBLE_EQ(res.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(res.exit_rate.at("L1"), 0.5);
  // exits save 20 - (5 + 0.25); non-exits lose 0.25
  EXPECT_NEAR(res.mean_savings_ms, (2 * 14.75 - 2 * 0.25) / 4.0, 1e-12);
  EXPECT_THROW(evaluate_window({}, cfg, s.profile), DomainError);
}

TEST(ExitEngine, ExitSiteNeverMovesLaterWhenAThresholdRises) {
  Env s;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto recs = random_records(s.sites, 10, 0.5, rng);
    std::vector<double> thr(s.sites.size());
    for (auto& t : thr) t = u(rng) * 0.8;
    const auto cfg = make_config(s.sites, {0, 1, 2, 3}, thr);
    auto raised = cfg;
    const std::size_t j = rng() % raised.size();
    raised.ramps[j].threshold = std::min(1.0, raised.ramps[j].threshold + u(rng) * 0.3);
    for (const auto& r : recs) {
      const auto a = evaluate_record(r, cfg, s.profile, 1).exit_ramp.value_or(99);
      const auto b = evaluate_record(r, raised, s.profile, 1).exit_ramp.value_or(99);
      EXPECT_LE(b, a);
    }
  }
}

TEST(ExitEngine, DenseEvaluatorMatchesPerRecordEvaluation) {
  Env s;
  std::mt19937_64 rng(23);
  const auto recs = random_records(s.sites, 64, 0.7, rng);
  const auto cfg = make_config(s.sites, {0, 2, 3}, {0.2, 0.4, 0.6});
  const auto ramps = cfg.sites();
  const WindowEvaluator eval(recs, ramps, s.profile);
  const auto thr = cfg.thresholds();
  const auto st = eval.evaluate(thr);
  std::size_t correct = 0;
  double savings = 0.0;
  for (const auto& r : recs) {
    const auto o = evaluate_record(r, cfg, s.profile, 1);
    correct += o.correct;
    savings += 20.0 - o.serve_ms;
  }
  EXPECT_EQ(st.correct, correct);
  EXPECT_NEAR(st.savings_sum_ms, savings, 1e-9);
  std::size_t c2 = 0;
  double s2 = 0.0;
  eval.evaluate_totals(thr, c2, s2);
  EXPECT_EQ(c2, correct);
  EXPECT_NEAR(s2, savings, 1e-9);
}

TEST(ExitEngine, ConfigChecks) {
  Env s;
  EXPECT_THROW(check_config(make_config(s.sites, {2, 1}, {0.1, 0.1})), ParameterError);
  EXPECT_THROW(check_config(make_config(s.sites, {1}, {1.5})), ParameterError);
  EXPECT_NO_THROW(check_config(make_config(s.sites, {1, 2}, {0.0, 1.0})));
  // four ramps at 0.25 ms against a 2% cap of 0.4 ms
  EXPECT_THROW(check_config(make_config(s.sites, {0, 1}, {0, 0}), RampBudget{0.02}, s.profile), ParameterError);
  EXPECT_NO_THROW(check_config(make_config(s.sites, {0}, {0}), RampBudget{0.02}, s.profile));
}

TEST(ExitEngine, OptimalExitIsEarliestAgreeingSite) {
  Env s;
  auto r = make_record(1, 0, {{"L0", {1, 2}}, {"L1", {1, 3}}, {"L2", {1, 1}}, {"L3", {1, 1}}}, 1);
  EXPECT_EQ(*optimal_exit(r, s.sites), "L2");
  r.ramps["L2"].label = 7;
  r.ramps["L3"].label = 7;
  EXPECT_FALSE(optimal_exit(r, s.sites));
}

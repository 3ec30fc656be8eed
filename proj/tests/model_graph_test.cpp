#include <gtest/gtest.h>

#include <random>

#include "eesim/errors.hpp"
#include "eesim/exit_engine.hpp"
#include "eesim/model_graph.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace eesim;
using eesim::testing::chain_profile;

namespace {

ModelProfile profile_of(const oracle::RandomDag& g) {
  std::map<LayerId, BatchCurve> lat, ramp;
  for (const auto& n : g.nodes) {
    lat.emplace(n, BatchCurve::constant(1.0));
    if (n != g.nodes.back()) ramp.emplace(n, BatchCurve::constant(0.01));
  }
  return ModelProfile("dag", g.nodes, g.edges, lat, ramp, g.nodes.back());
}

// stem -> {a, b} -> add -> {c, d} -> add2 -> head
ModelProfile residual_profile() {
  std::vector<LayerId> nodes{"stem", "a", "b", "add", "c", "d", "add2", "head"};
  std::vector<Edge> edges{{"stem", "a"}, {"stem", "b"}, {"a", "add"}, {"b", "add"},
                          {"add", "c"},  {"add", "d"},  {"c", "add2"}, {"d", "add2"}, {"add2", "head"}};
  std::map<LayerId, BatchCurve> lat, ramp;
  for (const auto& n : nodes) lat.emplace(n, BatchCurve({{1, 1.0}, {8, 4.0}}));
  for (const auto& n : {"stem", "add", "add2"}) ramp.emplace(n, BatchCurve::constant(0.1));
  return ModelProfile("res", nodes, edges, lat, ramp, "head");
}

}  // namespace

TEST(ModelGraph, RejectsCycles) {
  std::map<LayerId, BatchCurve> lat{{"a", BatchCurve::constant(1)}, {"b", BatchCurve::constant(1)}};
  EXPECT_THROW(ModelProfile("x", {"a", "b"}, {{"a", "b"}, {"b", "a"}}, lat, {}, "b"), StructuralError);
}

TEST(ModelGraph, RejectsNonTopologicalOrder) {
  std::map<LayerId, BatchCurve> lat{{"a", BatchCurve::constant(1)}, {"b", BatchCurve::constant(1)}};
  try {
    ModelProfile("x", {"b", "a"}, {{"a", "b"}}, lat, {}, "b");
    FAIL();
  } catch (const StructuralError& e) {
    EXPECT_NE(std::string(e.what()).find("topological"), std::string::npos);
  }
}

TEST(ModelGraph, RejectsUnreachableOutputAndUnknownNodes) {
  std::map<LayerId, BatchCurve> lat{{"a", BatchCurve::constant(1)},
                                    {"b", BatchCurve::constant(1)},
                                    {"c", BatchCurve::constant(1)}};
  EXPECT_THROW(ModelProfile("x", {"a", "b", "c"}, {{"a", "c"}}, lat, {}, "c"), StructuralError);
  EXPECT_THROW(ModelProfile("x", {"a", "b", "c"}, {{"a", "zz"}}, lat, {}, "c"), StructuralError);
  EXPECT_THROW(ModelProfile("x", {"a", "a"}, {}, lat, {}, "a"), StructuralError);
}

TEST(ModelGraph, RejectsMissingLatency) {
  std::map<LayerId, BatchCurve> lat{{"a", BatchCurve::constant(1)}};
  EXPECT_THROW(ModelProfile("x", {"a", "b"}, {{"a", "b"}}, lat, {}, "b"), StructuralError);
  lat.emplace("b", BatchCurve({{2, 1.0}}));
  EXPECT_THROW(ModelProfile("x", {"a", "b"}, {{"a", "b"}}, lat, {}, "b"), StructuralError);
}

TEST(ModelGraph, PrefixSumsFollowTopologicalOrder) {
  const auto p = residual_profile();
  EXPECT_DOUBLE_EQ(p.total_ms(1), 8.0);
  EXPECT_DOUBLE_EQ(p.total_ms(8), 32.0);
  EXPECT_DOUBLE_EQ(p.prefix_ms(p.index_of("add"), 1), 4.0);
  EXPECT_NEAR(p.prefix_ms(p.index_of("add"), 4), 4.0 * (1.0 + 3.0 * 3.0 / 7.0), 1e-12);
}

TEST(ModelGraph, CutVerticesOfResidualBlocks) {
  const auto p = residual_profile();
  EXPECT_EQ(cut_vertices(p), (std::vector<LayerId>{"stem", "add", "add2"}));
  const auto sites = find_feasible_sites(p);
  ASSERT_EQ(sites.size(), 3u);
  EXPECT_DOUBLE_EQ(sites[1].prefix_ms(1), 4.0);
  EXPECT_DOUBLE_EQ(sites[1].ramp_ms(1), 0.1);
}

TEST(ModelGraph, MissingRampLatencyAtCutVertex) {
  std::map<LayerId, BatchCurve> lat{{"a", BatchCurve::constant(1)}, {"b", BatchCurve::constant(1)}};
  const ModelProfile p("x", {"a", "b"}, {{"a", "b"}}, lat, {}, "b");
  EXPECT_THROW(find_feasible_sites(p), StructuralError);
}

TEST(ModelGraph, CutVerticesMatchRemoveAndTest) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 29;
    const auto g = oracle::random_dag(n, rng);
    const auto p = profile_of(g);
    EXPECT_EQ(cut_vertices(p), oracle::brute_force_cut_vertices(g, g.nodes.back())) << "trial " << trial;
  }
}

TEST(ModelGraph, MultipleSourcesHaveNoCommonDominatorBeforeMerge) {
  std::map<LayerId, BatchCurve> lat;
  for (auto n : {"x", "y", "m", "o"}) lat.emplace(n, BatchCurve::constant(1));
  std::map<LayerId, BatchCurve> ramp{{"m", BatchCurve::constant(0.1)}};
  const ModelProfile p("two", {"x", "y", "m", "o"}, {{"x", "m"}, {"y", "m"}, {"m", "o"}}, lat, ramp, "o");
  EXPECT_EQ(cut_vertices(p), (std::vector<LayerId>{"m"}));
}

TEST(ModelGraph, EvenSpacing) {
  EXPECT_EQ(even_spacing(10, 4), (std::vector<std::size_t>{0, 3, 6, 9}));
  EXPECT_EQ(even_spacing(10, 1), (std::vector<std::size_t>{5}));
  EXPECT_EQ(even_spacing(5, 5), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_TRUE(even_spacing(5, 0).empty());
}

TEST(ModelGraph, InitialPlacementFillsBudget) {
  const auto p = chain_profile(std::vector<double>(11, 1.0), 0.05);
  const auto sites = find_feasible_sites(p);
  ASSERT_EQ(sites.size(), 10u);
  const auto cfg = initial_placement(sites, RampBudget{0.02}, p);
  ASSERT_EQ(cfg.size(), 4u);
  EXPECT_EQ(cfg.ramps[1].site.layer, "L3");
  for (const auto& r : cfg.ramps) EXPECT_EQ(r.threshold, 0.0);
  EXPECT_TRUE(initial_placement(sites, RampBudget{0.001}, p).empty());
  EXPECT_EQ(initial_placement(sites, RampBudget{1.0}, p).size(), 10u);
  EXPECT_THROW(initial_placement({}, RampBudget{}, p), DomainError);
}

TEST(ModelGraph, BudgetAdmitsUpToCap) {
  const auto p = chain_profile({5.0, 5.0}, 0.1);
  const RampBudget b{0.02};
  EXPECT_DOUBLE_EQ(b.cap_ms(p), 0.2);
  EXPECT_TRUE(b.admits(0.2, p));
  EXPECT_FALSE(b.admits(0.2001, p));
}

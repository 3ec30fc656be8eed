#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "eesim/errors.hpp"
#include "eesim/stats.hpp"
#include "oracles.hpp"

using namespace eesim;

TEST(Stats, PercentilesOfOneToHundred) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_NEAR(percentile(v, 25), 25.75, 1e-12);
  EXPECT_NEAR(percentile(v, 50), 50.5, 1e-12);
  EXPECT_NEAR(percentile(v, 95), 95.05, 1e-12);
  EXPECT_DOUBLE_EQ(percentile(v, 0), 1.0);
  EXPECT_DOUBLE_EQ(percentile(v, 100), 100.0);
}

TEST(Stats, MatchesOracleOnShuffledSamples) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 40);
    for (auto& x : v) x = u(rng);
    for (double p : {0.0, 12.5, 25.0, 50.0, 95.0, 99.0, 100.0})
      EXPECT_NEAR(percentile(v, p), oracle::percentile(v, p), 1e-9);
  }
}

TEST(Stats, RejectsBadInput) {
  std::vector<double> empty;
  EXPECT_THROW(percentile(empty, 50), DomainError);
  std::vector<double> one{1.0};
  EXPECT_THROW(percentile(one, -1), DomainError);
  EXPECT_THROW(percentile(one, 101), DomainError);
}

TEST(Stats, SummaryAndCdf) {
  const std::vector<double> v{4, 1, 3, 2};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.max, 4.0);
  EXPECT_DOUBLE_EQ(s.p50, 2.5);
  const auto cdf = empirical_cdf(v);
  ASSERT_EQ(cdf.size(), 4u);
  EXPECT_DOUBLE_EQ(cdf.front().first, 1.0);
  EXPECT_DOUBLE_EQ(cdf.front().second, 0.25);
  EXPECT_DOUBLE_EQ(cdf.back().second, 1.0);
  const auto z = summarize(std::vector<double>{});
  EXPECT_EQ(z.p50, 0.0);
}

TEST(Stats, Lag1Autocorrelation) {
  std::vector<double> alt;
  for (int i = 0; i < 100; ++i) alt.push_back(i % 2 ? 1.0 : -1.0);
  EXPECT_LT(lag1_autocorrelation(alt), -0.9);
  std::vector<double> ramp(100);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  EXPECT_GT(lag1_autocorrelation(ramp), 0.9);
}

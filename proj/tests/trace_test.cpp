#include <gtest/gtest.h>

#include <sstream>

#include "eesim/errors.hpp"
#include "eesim/stats.hpp"
#include "eesim/trace.hpp"
#include "fixtures.hpp"

using namespace eesim;
using eesim::testing::chain_profile;

namespace {

const ModelProfile& profile3() {
  static const auto p = chain_profile({1.0, 1.0, 1.0}, 0.01);
  return p;
}

std::string header() { return R"({"schema":"eesim.trace/1","profile":"chain"})" "\n"; }

std::string line(int id, double t, double e0, double e1) {
  std::ostringstream s;
  s << R"({"id":)" << id << R"(,"arrival_ms":)" << t << R"(,"ramps":{"L0":{"err":)" << e0
    << R"(,"label":1},"L1":{"err":)" << e1 << R"(,"label":2}},"final":1})" << "\n";
  return s.str();
}

}  // namespace

TEST(Trace, ParsesAndRoundTrips) {
  std::istringstream in(header() + line(0, 0.0, 0.1, 0.2) + "\n" + line(1, 5.5, 0.3, 0.9));
  const auto w = parse_workload(in, profile3());
  ASSERT_EQ(w.records.size(), 2u);
  EXPECT_EQ(w.profile_ref, "chain");
  EXPECT_DOUBLE_EQ(w.records[1].arrival_ms, 5.5);
  EXPECT_EQ(w.records[1].signal("L1").label, 2);

  std::ostringstream out;
  write_workload(w, out);
  std::istringstream again(out.str());
  const auto w2 = parse_workload(again, profile3());
  EXPECT_EQ(w2.records, w.records);
}

TEST(Trace, ErrorOutOfRangeNamesRecordAndField) {
  std::istringstream in(line(0, 0.0, 0.1, 0.2) + line(7, 1.0, 1.3, 0.2));
  try {
    parse_workload(in, profile3());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(std::string(e.what()), "record 7: ramps.L0.err = 1.3 is outside [0,1]");
  }
}

TEST(Trace, MissingSiteDuplicateIdAndDisorder) {
  std::istringstream missing(R"({"id":3,"arrival_ms":0,"ramps":{"L0":{"err":0.1,"label":1}},"final":1})");
  EXPECT_THROW(parse_workload(missing, profile3()), ValidationError);
  std::istringstream dup(line(1, 0.0, 0.1, 0.2) + line(1, 1.0, 0.1, 0.2));
  EXPECT_THROW(parse_workload(dup, profile3()), ValidationError);
  std::istringstream disorder(line(1, 5.0, 0.1, 0.2) + line(2, 1.0, 0.1, 0.2));
  EXPECT_THROW(parse_workload(disorder, profile3()), ValidationError);
  std::istringstream garbage("{not json\n");
  EXPECT_THROW(parse_workload(garbage, profile3()), ValidationError);
  std::istringstream schema(R"({"schema":"other/9"})" "\n");
  EXPECT_THROW(parse_workload(schema, profile3()), ValidationError);
}

TEST(Trace, MissingFileIsIoError) {
  EXPECT_THROW(load_workload("/nonexistent/trace.jsonl", profile3()), IoError);
}

TEST(Trace, SynthesisIsDeterministicAndValid) {
  const auto p = chain_profile(std::vector<double>(6, 1.0), 0.01);
  const auto sites = find_feasible_sites(p);
  SynthesisParams sp;
  sp.n = 500;
  sp.continuity = 0.8;
  sp.agreement_curve = linear_agreement(sites, 0.2, 0.9);
  sp.seed = 9;
  const auto a = synthesize_workload(p, sp);
  const auto b = synthesize_workload(p, sp);
  EXPECT_EQ(a.workload.records, b.workload.records);
  EXPECT_NO_THROW(validate_workload(a.workload, sites));
  sp.seed = 10;
  EXPECT_NE(synthesize_workload(p, sp).workload.records, a.workload.records);
}

TEST(Trace, AgreementRatesFollowCurve) {
  const auto p = chain_profile(std::vector<double>(4, 1.0), 0.01);
  const auto sites = find_feasible_sites(p);
  SynthesisParams sp;
  sp.n = 20000;
  sp.agreement_curve = {{"L0", 0.2}, {"L1", 0.5}, {"L2", 0.8}};
  const auto w = synthesize_workload(p, sp).workload;
  for (const auto& [layer, want] : sp.agreement_curve) {
    std::size_t agree = 0;
    for (const auto& r : w.records) agree += r.signal(layer).label == r.final_label;
    EXPECT_NEAR(static_cast<double>(agree) / w.records.size(), want, 0.02) << layer;
  }
}

TEST(Trace, AgreementIsNestedAlongTheModel) {
  const auto p = chain_profile(std::vector<double>(5, 1.0), 0.01);
  const auto sites = find_feasible_sites(p);
  SynthesisParams sp;
  sp.n = 2000;
  sp.agreement_curve = linear_agreement(sites, 0.1, 0.9);
  for (const auto& r : synthesize_workload(p, sp).workload.records) {
    bool earlier = false;
    for (const auto& s : sites) {
      const bool now = r.signal(s.layer).label == r.final_label;
      if (earlier) EXPECT_TRUE(now);
      earlier = now;
    }
  }
}

TEST(Trace, FullAgreementAlwaysAgrees) {
  const auto p = chain_profile(std::vector<double>(3, 1.0), 0.01);
  SynthesisParams sp;
  sp.n = 300;
  sp.agreement_curve = {{"L0", 1.0}, {"L1", 1.0}};
  for (const auto& r : synthesize_workload(p, sp).workload.records)
    for (const auto& [l, s] : r.ramps) EXPECT_EQ(s.label, r.final_label);
}

TEST(Trace, ContinuityRaisesAutocorrelation) {
  const auto p = chain_profile(std::vector<double>(3, 1.0), 0.01);
  SynthesisParams sp;
  sp.n = 4000;
  sp.agreement_curve = {{"L0", 0.5}, {"L1", 0.5}};
  sp.continuity = 0.0;
  const auto lo = lag1_autocorrelation(synthesize_workload(p, sp).difficulty);
  sp.continuity = 0.95;
  const auto hi = lag1_autocorrelation(synthesize_workload(p, sp).difficulty);
  EXPECT_LT(std::abs(lo), 0.1);
  EXPECT_GT(hi, 0.85);
}

TEST(Trace, DriftLowersAgreementAfterShift) {
  const auto p = chain_profile(std::vector<double>(3, 1.0), 0.01);
  SynthesisParams sp;
  sp.n = 4000;
  sp.agreement_curve = {{"L0", 0.8}, {"L1", 0.9}};
  sp.drift = DriftSpec{2000, {{"L0", 0.2}, {"L1", 0.3}}};
  const auto w = synthesize_workload(p, sp).workload;
  std::size_t before = 0, after = 0;
  for (std::size_t i = 0; i < w.records.size(); ++i) {
    const bool ok = w.records[i].signal("L0").label == w.records[i].final_label;
    (i < 2000 ? before : after) += ok;
  }
  EXPECT_GT(before, 1400u);
  EXPECT_LT(after, 600u);
}

TEST(Trace, SynthesisRejectsBadCurves) {
  const auto p = chain_profile(std::vector<double>(3, 1.0), 0.01);
  SynthesisParams sp;
  sp.agreement_curve = {{"L0", 0.5}};
  EXPECT_THROW(synthesize_workload(p, sp), ParameterError);
  sp.agreement_curve = {{"L0", 0.9}, {"L1", 0.5}};
  EXPECT_THROW(synthesize_workload(p, sp), ParameterError);
  sp.agreement_curve = {{"L0", 0.5}, {"L1", 1.5}};
  EXPECT_THROW(synthesize_workload(p, sp), ParameterError);
  sp.agreement_curve = {{"L0", 0.5}, {"L1", 0.6}};
  sp.continuity = 1.5;
  EXPECT_THROW(synthesize_workload(p, sp), ParameterError);
}

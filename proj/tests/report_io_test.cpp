#include <gtest/gtest.h>

#include <sstream>

#include "eesim/errors.hpp"
#include "eesim/report_io.hpp"
#include "fixtures.hpp"

using namespace eesim;
using namespace eesim::testing;

namespace {

Workload small_workload(const ModelProfile& p, std::size_t n) {
  SynthesisParams sp;
  sp.n = n;
  sp.seed = 5;
  sp.mean_interarrival_ms = 15.0;
  sp.agreement_curve = linear_agreement(find_feasible_sites(p), 0.3, 0.9);
  return synthesize_workload(p, sp).workload;
}

}  // namespace

TEST(ReportIo, FormatNumberRoundTrips) {
  EXPECT_EQ(format_number(25.75), "25.75");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(3.0), "3");
  EXPECT_EQ(format_number(-2.5), "-2.5");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(ReportIo, ProfileRoundTrip) {
  const auto p = batched_chain_profile(6, 1.5, 0.1, 0.2, 0.05);
  const auto back = profile_from_json(profile_to_json(p));
  EXPECT_EQ(back.name(), p.name());
  EXPECT_EQ(back.output(), p.output());
  for (int b : {1, 3, 16, 40}) EXPECT_DOUBLE_EQ(back.total_ms(b), p.total_ms(b));
  EXPECT_EQ(find_feasible_sites(back).size(), find_feasible_sites(p).size());
  EXPECT_EQ(profile_to_json(back).dump(), profile_to_json(p).dump());
}

TEST(ReportIo, ProfileErrorsAreValidationErrors) {
  auto doc = profile_to_json(chain_profile({1, 1, 1}, 0.1));
  doc["edges"].push_back(Json::array({"L2", "L0"}));
  EXPECT_THROW(profile_from_json(doc), StructuralError);
  auto missing = profile_to_json(chain_profile({1, 1, 1}, 0.1));
  missing.erase("output");
  EXPECT_THROW(profile_from_json(missing), ValidationError);
}

TEST(ReportIo, ConfigRoundTrip) {
  const auto p = chain_profile({1, 1, 1, 1, 1}, 0.1);
  const auto sites = find_feasible_sites(p);
  const auto cfg = make_config(sites, {0, 2}, {0.25, 0.5});
  const auto back = config_from_json(config_to_json(cfg), p);
  ASSERT_EQ(back.ramps.size(), 2u);
  EXPECT_EQ(back.ramps[1].site.layer, "L2");
  EXPECT_EQ(back.ramps[1].threshold, 0.5);
  auto bad = config_to_json(cfg);
  bad["ramps"][0]["site"] = "L4";
  EXPECT_THROW(config_from_json(bad, p), ValidationError);
}

TEST(ReportIo, SimReportValidatesAndCarriesLatencies) {
  const auto p = batched_chain_profile(8, 1.0, 0.05, 0.1, 0.05);
  const auto w = small_workload(p, 300);
  ServingParams sp;
  sp.budget = RampBudget{0.1};
  sp.ramp_period = 64;
  const auto rep = run(w, p, sp);
  const auto doc = to_json(rep);
  EXPECT_EQ(doc.at("schema"), kSimReportSchema);
  EXPECT_NO_THROW(validate_report(doc));
  const auto lat = report_latencies(doc);
  EXPECT_EQ(lat.size(), rep.requests.size() - rep.dropped);
  EXPECT_DOUBLE_EQ(summarize(lat).p50, rep.latency.p50);
  EXPECT_FALSE(doc.dump().find("control_seconds") != std::string::npos);
}

TEST(ReportIo, TamperedSimReportIsRejectedWithPath) {
  const auto p = chain_profile({2, 2, 2, 2}, 0.1);
  const auto rep = run(small_workload(p, 50), p, ServingParams{});
  auto doc = to_json(rep);
  doc["requests"][3]["total_ms"] = doc["requests"][3]["total_ms"].get<double>() + 1.0;
  try {
    validate_report(doc);
    FAIL() << "accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("requests[3]"), std::string::npos) << e.what();
  }
  auto doc2 = to_json(rep);
  doc2["summary"]["latency"]["p50"] = 1e6;
  EXPECT_THROW(validate_report(doc2), ValidationError);
  auto doc3 = to_json(rep);
  doc3["schema"] = "eesim.unknown/9";
  EXPECT_THROW(validate_report(doc3), ValidationError);
}

TEST(ReportIo, ComparisonReportOrderAndDeltas) {
  const auto p = batched_chain_profile(8, 1.0, 0.05, 0.1, 0.05);
  ServingParams sp;
  sp.budget = RampBudget{0.1};
  const auto rep = compare_baselines(small_workload(p, 200), p, sp);
  const auto doc = to_json(rep);
  EXPECT_NO_THROW(validate_report(doc));
  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"schema", "summary", "vanilla", "adaptive", "optimal"}));
  EXPECT_FALSE(doc.at("vanilla").contains("schema"));
  EXPECT_TRUE(doc.at("summary").contains("adaptive_vs_vanilla"));
}

TEST(ReportIo, TptReportValidates) {
  const auto p = chain_profile({2, 2, 2, 2, 2}, 0.1);
  const auto sites = find_feasible_sites(p);
  SynthesisParams sp;
  sp.agreement_curve = linear_agreement(sites, 0.4, 0.9);
  const auto seqs = synthesize_token_trace(p, 4, 12, sp);
  const auto rep = run_generative(seqs, p, make_config(sites, {2}, {0.3}), GenerativeParams{});
  auto doc = to_json(rep);
  EXPECT_NO_THROW(validate_report(doc));
  EXPECT_EQ(report_latencies(doc).size(), 48u);
  doc["tokens"][0]["latency_ms"] = 0.0;
  EXPECT_THROW(validate_report(doc), ValidationError);
}

TEST(ReportIo, CsvOutputs) {
  std::ostringstream cdf;
  write_cdf_csv({3.0, 1.0, 2.0, 4.0}, cdf);
  EXPECT_EQ(cdf.str(), "latency_ms,cumulative_fraction\n1,0.25\n2,0.5\n3,0.75\n4,1\n");

  SimReport rep;
  RequestResult r;
  r.id = 4;
  r.arrival_ms = 1.5;
  r.queue_ms = 0.5;
  r.serve_ms = 2;
  r.total_ms = 2.5;
  r.exit_site = "L1";
  r.batch = 2;
  rep.requests.push_back(r);
  std::ostringstream req;
  write_requests_csv(rep, req);
  EXPECT_EQ(req.str(),
            "id,arrival_ms,queue_ms,serve_ms,total_ms,exit_site,correct,slo_violated,dropped,batch\n"
            "4,1.5,0.5,2,2.5,L1,1,0,0,2\n");
}

TEST(ReportIo, MissingFileIsIoError) {
  EXPECT_THROW(read_json_file("/nonexistent/definitely/missing.json"), IoError);
  EXPECT_THROW(load_profile("/nonexistent/definitely/missing.json"), IoError);
}

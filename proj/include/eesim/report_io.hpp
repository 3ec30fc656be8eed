#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "eesim/exit_engine.hpp"
#include "eesim/generative_sim.hpp"
#include "eesim/model_graph.hpp"
#include "eesim/serving_sim.hpp"

namespace eesim {

using Json = nlohmann::ordered_json;

inline constexpr const char* kProfileSchema = "eesim.profile/1";
inline constexpr const char* kSimReportSchema = "eesim.sim_report/1";
inline constexpr const char* kCompareSchema = "eesim.compare/1";
inline constexpr const char* kTptReportSchema = "eesim.tpt_report/1";
inline constexpr const char* kConfigSchema = "eesim.config/1";
inline constexpr const char* kTuneSchema = "eesim.tune/1";
inline constexpr const char* kPercentileSchema = "eesim.percentiles/1";

// Profile document:
//   {"schema", "name", "nodes":[..], "edges":[[from,to],..],
//    "latencies":{layer:{batch:ms}}, "ramp_latency":{layer:{batch:ms}}, "output"}
ModelProfile profile_from_json(const Json& doc);
Json profile_to_json(const ModelProfile& profile);
ModelProfile load_profile(const std::filesystem::path& path);

Json config_to_json(const EEConfig& config);
// Ramps are looked up among the profile's feasible sites.
EEConfig config_from_json(const Json& doc, const ModelProfile& profile);

Json to_json(const SimReport& report);
Json to_json(const ComparisonReport& report);
Json to_json(const TptReport& report);

// Checks a report document against the schema named in its "schema" field.
// Throws ValidationError with a path to the first offending field.
void validate_report(const Json& doc);

// Latency sample carried by a sim or TPT report (served requests / tokens).
std::vector<double> report_latencies(const Json& doc);

void write_requests_csv(const SimReport& report, std::ostream& out);
void write_tokens_csv(const TptReport& report, std::ostream& out);
void write_cdf_csv(const std::vector<double>& latencies, std::ostream& out);

// Shortest round-trip decimal, independent of the global locale.
std::string format_number(double value);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace eesim

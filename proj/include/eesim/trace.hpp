#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eesim/model_graph.hpp"

namespace eesim {

// What one ramp reported for one input: its top prediction and an error score
// in [0, 1] (lower means more confident).
struct RampSignal {
  double err = 1.0;
  std::int64_t label = 0;

  bool operator==(const RampSignal&) const = default;
};

struct RequestRecord {
  std::int64_t id = 0;
  double arrival_ms = 0.0;
  std::map<LayerId, RampSignal> ramps;
  std::int64_t final_label = 0;

  const RampSignal& signal(const LayerId& layer) const;
  bool operator==(const RequestRecord&) const = default;
};

struct Workload {
  std::string profile_ref;
  std::vector<RequestRecord> records;
};

// Checks one record against the feasible sites of its profile. Throws
// ValidationError naming the record id and offending field.
void validate_record(const RequestRecord& record, std::span<const RampSite> sites);
// Full workload check: every record plus arrival ordering and id uniqueness.
void validate_workload(const Workload& workload, std::span<const RampSite> sites);

// JSON Lines. An optional first line {"schema": ..., "profile": ...} carries
// the companion profile name; every other line is one record.
Workload load_workload(const std::filesystem::path& path, const ModelProfile& profile);
Workload parse_workload(std::istream& in, const ModelProfile& profile, const std::string& origin = "<stream>");
void save_workload(const Workload& workload, const std::filesystem::path& path);
void write_workload(const Workload& workload, std::ostream& out);

struct DriftSpec {
  std::size_t at = 0;                       // first record index of the new regime
  std::map<LayerId, double> agreement_after;  // replaces the agreement curve from `at`
};

struct SynthesisParams {
  std::size_t n = 1000;
  double continuity = 0.0;  // AR(1) coefficient of per-request difficulty
  std::map<LayerId, double> agreement_curve;
  std::uint64_t seed = 1;
  double mean_interarrival_ms = 10.0;
  bool poisson_arrivals = true;
  int num_classes = 10;
  // Sharpness of the error-score response around the agreement boundary, and
  // the standard deviation of additive score noise.
  double score_sharpness = 6.0;
  double score_noise = 0.05;
  std::optional<DriftSpec> drift;
};

struct SyntheticWorkload {
  Workload workload;
  std::vector<double> difficulty;  // in (0, 1), one per record
};

// Deterministic given params.seed. Ramp j agrees with the final label exactly
// when the request's difficulty is below agreement_curve(j). Error scores are
// calibrated against the pre-drift curve, so a drift that lowers agreement
// leaves ramps overconfident.
SyntheticWorkload synthesize_workload(const ModelProfile& profile, const SynthesisParams& params);

// Spreads `lo..hi` linearly over the feasible sites in topological order.
std::map<LayerId, double> linear_agreement(std::span<const RampSite> sites, double lo, double hi);

}  // namespace eesim

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eesim/controller.hpp"
#include "eesim/stats.hpp"
#include "eesim/trace.hpp"

namespace eesim {

enum class ServingMode { vanilla, adaptive, optimal };
std::string to_string(ServingMode mode);
ServingMode parse_mode(const std::string& name);

struct ServingParams {
  double slo_ms = 100.0;
  int max_batch = 16;
  double acc_constraint = 0.99;  // accuracy level, i.e. 1 - tolerated loss
  RampBudget budget{0.02};
  TunerParams tuner;
  std::size_t ramp_period = 128;
  bool adaptation_enabled = true;
  bool ramp_adjust_enabled = true;
  // Drop requests that already waited past the SLO instead of serving them late.
  bool drop_late = false;
  ServingMode mode = ServingMode::adaptive;
  // Tune thresholds once on the first tuning_history records before serving.
  bool initial_tune = false;
  // Starting configuration; defaults to the even initial placement.
  std::optional<EEConfig> initial_config;

  void validate() const;
};

struct RequestResult {
  std::int64_t id = 0;
  double arrival_ms = 0.0;
  double queue_ms = 0.0;
  double serve_ms = 0.0;
  double total_ms = 0.0;
  std::optional<LayerId> exit_site;
  bool correct = true;
  bool slo_violated = false;
  bool dropped = false;
  int batch = 0;
};

struct SimReport {
  ServingMode mode = ServingMode::adaptive;
  std::vector<RequestResult> requests;  // workload order
  std::vector<double> window_accuracy;  // consecutive accuracy_window-sized chunks
  double accuracy = 1.0;
  double throughput_rps = 0.0;
  double makespan_ms = 0.0;
  double busy_ms = 0.0;
  std::size_t batches = 0;
  std::size_t slo_violations = 0;
  std::size_t dropped = 0;
  Percentiles latency;  // over total_ms of served requests
  std::vector<AdaptationEvent> events;
  EEConfig initial_config;
  EEConfig final_config;
  double control_seconds = 0.0;  // wall clock, kept out of serialized reports
};

// Single-server, work-conserving batching: whenever the server is idle and
// requests are queued, up to max_batch of them start together. The batch keeps
// the server busy for the full model plus every active ramp; each request's
// result leaves as soon as its exit point is reached.
SimReport run(const Workload& workload, const ModelProfile& profile, const ServingParams& params);

struct ComparisonReport {
  SimReport vanilla;
  SimReport adaptive;
  SimReport optimal;
};

ComparisonReport compare_baselines(const Workload& workload, const ModelProfile& profile,
                                   const ServingParams& params);

}  // namespace eesim

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eesim/exit_engine.hpp"
#include "eesim/threshold_tuner.hpp"

namespace eesim {

struct RampUtility {
  LayerId site;
  double savings_ms = 0.0;    // summed over the period
  double overheads_ms = 0.0;  // summed over the period
  double exit_rate = 0.0;
  double utility_ms = 0.0;    // savings - overheads
};

struct UtilityReport {
  std::vector<RampUtility> ramps;  // same order as the config
  std::size_t period_len = 0;
  double mean_savings_ms = 0.0;    // net per-request savings actually achieved

  bool any_negative() const;
};

// One served request inside a ramp-tuning period.
struct PeriodSample {
  ExitOutcome outcome;
  int batch = 1;
};

// A ramp's savings are the latency avoided by requests that exited there; its
// overheads are its own latency charged to every request that went past it.
// Requests that exited earlier never reach the ramp and count for nothing.
UtilityReport score_utilities(std::span<const PeriodSample> period, const EEConfig& config,
                              const ModelProfile& profile);

struct Deactivation {
  RampSite site;
  double exit_rate = 0.0;
};
using DeactivationLedger = std::vector<Deactivation>;  // topological order

struct Candidate {
  RampSite site;
  double exit_rate_bound = 0.0;
  double utility_bound_ms = 0.0;
};

// Candidate ramps lie after the latest surviving ramp (from the first site
// when there is none), split into intervals by this round's deactivations.
// The first candidates are interval medians; if none has a positive
// upper-bound utility, each interval is bisected toward its end and the
// search repeats. Candidates costing more than `max_ramp_ms` at batch 1 are
// skipped.
std::optional<Candidate> propose_candidate(const DeactivationLedger& ledger,
                                           std::optional<std::size_t> latest_positive_topo,
                                           std::span<const RampSite> sites, const ModelProfile& profile,
                                           std::size_t period_len,
                                           double max_ramp_ms = std::numeric_limits<double>::infinity());

// Upper-bound exit rate for a candidate at topological position `topo`: the
// rate of the nearest deactivated ramp at or after it plus every earlier one.
double upper_bound_exit_rate(const DeactivationLedger& ledger, std::size_t topo);

enum class AdjustAction { none, retuned, deactivated, added, shifted };
std::string to_string(AdjustAction action);

struct AdjustResult {
  EEConfig config;
  AdjustAction action = AdjustAction::none;
  DeactivationLedger ledger;
  std::optional<Candidate> trial;
  std::optional<LayerId> added;
  std::optional<LayerId> shifted_from;
  std::optional<LayerId> shifted_to;
};

// One round of ramp-set adjustment driven by the period's utilities.
AdjustResult adjust(const UtilityReport& report, const EEConfig& config, std::span<const RampSite> sites,
                    const RampBudget& budget, std::span<const RequestRecord> history, const TunerParams& params,
                    const ModelProfile& profile);

}  // namespace eesim

#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eesim/exit_engine.hpp"
#include "eesim/ramp_manager.hpp"
#include "eesim/threshold_tuner.hpp"

namespace eesim {

struct ControllerParams {
  TunerParams tuner;
  double acc_constraint = 0.99;  // accuracy level that triggers re-tuning when missed
  RampBudget budget;
  std::size_t ramp_period = 128;
  bool adaptation_enabled = true;
  bool ramp_adjust_enabled = true;
};

enum class EventKind { threshold_tune, ramp_adjust };
std::string to_string(EventKind kind);

struct AdaptationEvent {
  double time_ms = 0.0;
  std::size_t after_requests = 0;  // responses observed when the event ran
  EventKind kind = EventKind::threshold_tune;
  EEConfig before;
  EEConfig after;
  std::optional<UtilityReport> utilities;
  AdjustAction action = AdjustAction::none;
};

// Owns the live configuration and both control loops: accuracy-triggered
// threshold tuning and periodic ramp adjustment. The served configuration is
// published as an immutable snapshot; readers hold on to the snapshot they
// started with, so a swap never shows a half-updated config.
class Controller {
 public:
  Controller(const ModelProfile& profile, std::vector<RampSite> sites, EEConfig initial, ControllerParams params);

  std::shared_ptr<const EEConfig> snapshot() const;
  const std::vector<AdaptationEvent>& events() const { return events_; }
  const AccuracyMonitor& monitor() const { return monitor_; }
  std::size_t observed() const { return observed_; }
  // Wall-clock seconds spent inside tune()/adjust(); not part of any report.
  double control_seconds() const { return control_seconds_; }

  // Feeds one completed request served under `served`. Outcomes from a ramp
  // set that has since been replaced still count toward accuracy and history
  // but not toward the current utility period.
  void observe(const RequestRecord& record, const ExitOutcome& outcome, const EEConfig& served, int batch,
               double now_ms);

 private:
  void publish(EEConfig next);

  const ModelProfile& profile_;
  std::vector<RampSite> sites_;
  ControllerParams params_;
  std::shared_ptr<const EEConfig> current_;

  AccuracyMonitor monitor_;
  std::deque<RequestRecord> history_;
  std::vector<PeriodSample> period_;
  std::vector<AdaptationEvent> events_;
  std::size_t observed_ = 0;
  double control_seconds_ = 0.0;
};

}  // namespace eesim

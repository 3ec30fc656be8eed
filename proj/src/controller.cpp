#include "eesim/controller.hpp"

#include <atomic>
#include <chrono>
#include <vector>

namespace eesim {
namespace {

bool same_ramp_set(const EEConfig& a, const EEConfig& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a.ramps[j].site.layer != b.ramps[j].site.layer) return false;
  return true;
}

}  // namespace

std::string to_string(EventKind kind) {
  return kind == EventKind::threshold_tune ? "threshold_tune" : "ramp_adjust";
}

Controller::Controller(const ModelProfile& profile, std::vector<RampSite> sites, EEConfig initial,
                       ControllerParams params)
    : profile_(profile),
      sites_(std::move(sites)),
      params_(std::move(params)),
      current_(std::make_shared<const EEConfig>(std::move(initial))),
      monitor_(params_.tuner.accuracy_window) {
  params_.tuner.validate();
  check_config(*current_, params_.budget, profile_);
}

std::shared_ptr<const EEConfig> Controller::snapshot() const { return std::atomic_load(&current_); }

void Controller::publish(EEConfig next) {
  std::atomic_store(&current_, std::shared_ptr<const EEConfig>(std::make_shared<const EEConfig>(std::move(next))));
}

void Controller::observe(const RequestRecord& record, const ExitOutcome& outcome, const EEConfig& served, int batch,
                         double now_ms) {
  ++observed_;
  monitor_.record(outcome.correct);
  history_.push_back(record);
  while (history_.size() > params_.tuner.tuning_history) history_.pop_front();
  if (same_ramp_set(served, *snapshot())) period_.push_back({outcome, batch});

  if (!params_.adaptation_enabled) return;

  const auto cfg = snapshot();
  if (!cfg->empty() && should_trigger(monitor_, params_.acc_constraint)) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<RequestRecord> window(history_.begin(), history_.end());
    const auto tuned = tune(window, cfg->sites(), params_.tuner, profile_);
    EEConfig next = *cfg;
    for (std::size_t j = 0; j < next.size(); ++j) next.ramps[j].threshold = tuned.thresholds[j];
    control_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    AdaptationEvent ev;
    ev.time_ms = now_ms;
    ev.after_requests = observed_;
    ev.kind = EventKind::threshold_tune;
    ev.before = *cfg;
    ev.after = next;
    events_.push_back(std::move(ev));
    publish(std::move(next));
    // Outcomes in the buffer were produced by the replaced thresholds.
    monitor_.clear();
  }

  if (params_.ramp_adjust_enabled && period_.size() >= params_.ramp_period) {
    const auto start = std::chrono::steady_clock::now();
    const auto live = snapshot();
    const std::vector<RequestRecord> window(history_.begin(), history_.end());
    AdaptationEvent ev;
    ev.time_ms = now_ms;
    ev.after_requests = observed_;
    ev.kind = EventKind::ramp_adjust;
    ev.before = *live;
    std::optional<UtilityReport> report;
    if (!live->empty()) report = score_utilities(period_, *live, profile_);
    const auto res = adjust(report.value_or(UtilityReport{}), *live, sites_, params_.budget, window, params_.tuner,
                            profile_);
    control_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ev.after = res.config;
    ev.utilities = report;
    ev.action = res.action;
    events_.push_back(std::move(ev));
    if (res.action != AdjustAction::none) publish(res.config);
    period_.clear();
  }
}

}  // namespace eesim

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "eesim/model_graph.hpp"
#include "eesim/trace.hpp"

namespace eesim {

struct ActiveRamp {
  RampSite site;
  double threshold = 0.0;
};

// The active ramp set and per-ramp thresholds, in topological order.
struct EEConfig {
  std::vector<ActiveRamp> ramps;

  bool empty() const { return ramps.empty(); }
  std::size_t size() const { return ramps.size(); }
  std::vector<RampSite> sites() const;
  std::vector<double> thresholds() const;
  double overhead_ms(int batch) const;
  // Position of `layer` among active ramps, or size() when inactive.
  std::size_t position_of(const LayerId& layer) const;
};

// Ordering and threshold range. Throws ParameterError.
void check_config(const EEConfig& config);
// Ordering, thresholds, and the budget cap.
void check_config(const EEConfig& config, const RampBudget& budget, const ModelProfile& profile);

struct ExitOutcome {
  std::optional<LayerId> exit_site;
  std::optional<std::size_t> exit_ramp;  // position in the config that produced it
  std::int64_t released_label = 0;
  bool correct = true;
  double serve_ms = 0.0;
};

// The earliest active ramp whose score is strictly below its threshold
// releases the result. With avg_k > 1 the score is the mean of the last
// avg_k active-ramp error scores up to and including this ramp.
ExitOutcome evaluate_record(const RequestRecord& record, const EEConfig& config, const ModelProfile& profile,
                            int batch, int avg_k = 1);

struct WindowResult {
  double accuracy = 1.0;
  double mean_savings_ms = 0.0;
  std::map<LayerId, double> exit_rate;
};

WindowResult evaluate_window(std::span<const RequestRecord> records, const EEConfig& config,
                             const ModelProfile& profile, int avg_k = 1);

// Dense view of a window over a fixed ramp list, so that threshold settings
// can be scored repeatedly without touching the records again.
class WindowEvaluator {
 public:
  WindowEvaluator(std::span<const RequestRecord> records, std::span<const RampSite> ramps,
                  const ModelProfile& profile, int batch = 1, int avg_k = 1);

  struct Stats {
    std::size_t correct = 0;
    double savings_sum_ms = 0.0;
    std::vector<std::size_t> exits;  // per ramp
  };

  Stats evaluate(std::span<const double> thresholds) const;
  // Same as evaluate() but only the two aggregates; hot loop of the grid search.
  void evaluate_totals(std::span<const double> thresholds, std::size_t& correct, double& savings_sum) const;

  std::size_t records() const { return n_; }
  std::size_t ramps() const { return r_; }
  double vanilla_ms() const { return vanilla_ms_; }

 private:
  std::size_t n_ = 0;
  std::size_t r_ = 0;
  double vanilla_ms_ = 0.0;
  std::vector<double> score_;     // n_ x r_
  std::vector<std::uint8_t> agree_;  // n_ x r_
  std::vector<double> exit_savings_;  // per ramp: vanilla - serve_ms when exiting there
  double no_exit_savings_ = 0.0;      // -(sum of all ramp overheads)
};

// Earliest site whose label matches the original model, or nullopt.
std::optional<LayerId> optimal_exit(const RequestRecord& record, std::span<const RampSite> sites);

}  // namespace eesim

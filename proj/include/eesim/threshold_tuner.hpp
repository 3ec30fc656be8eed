#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "eesim/exit_engine.hpp"

namespace eesim {

struct TunerParams {
  double acc_loss_budget = 0.01;
  double init_step = 0.1;
  double min_step = 0.01;
  std::size_t accuracy_window = 16;
  std::size_t tuning_history = 128;
  int avg_k = 1;

  void validate() const;
};

// Ring buffer of the most recent correctness bits.
class AccuracyMonitor {
 public:
  explicit AccuracyMonitor(std::size_t window);

  void record(bool correct);
  void clear();
  bool full() const { return count_ == bits_.size(); }
  std::size_t size() const { return count_; }
  std::size_t window() const { return bits_.size(); }
  // Mean of the buffered bits; 1.0 when empty.
  double accuracy() const;

 private:
  std::vector<bool> bits_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  std::size_t correct_ = 0;
};

// Fires only once the buffer is full and its accuracy is strictly below the
// constraint (an accuracy level such as 0.99, not a loss).
bool should_trigger(const AccuracyMonitor& monitor, double constraint);

// One hill-climbing round, kept for inspection.
struct TuneRound {
  std::vector<double> steps;  // step sizes at the start of the round
  std::optional<std::size_t> chosen;
  std::vector<std::size_t> overstepped;
};

struct TuneResult {
  std::vector<double> thresholds;
  double latency_savings_ms = 0.0;  // mean over the history
  double accuracy = 1.0;
  std::vector<TuneRound> rounds;
};

// Greedy multiplicative-increase / multiplicative-decrease hill climbing from
// all-zero thresholds. Each round tries raising every ramp by its own step,
// applies the feasible raise with the best savings per unit accuracy loss,
// doubles that ramp's step and halves the step of every ramp whose raise broke
// the loss budget. Stops when nothing is feasible and every step is at the
// floor.
TuneResult tune(std::span<const RequestRecord> history, std::span<const RampSite> ramps, const TunerParams& params,
                const ModelProfile& profile);

inline constexpr std::size_t kDefaultGridCap = 5'000'000;

// Exhaustive search over {0, step, ..., 1}^R. Returns the feasible lattice point
// with the highest mean savings; ties go to the lexicographically smallest
// threshold vector. Throws ExplosionCapError if the lattice exceeds `cap`.
TuneResult grid_oracle(std::span<const RequestRecord> history, std::span<const RampSite> ramps,
                       double acc_loss_budget, double step, const ModelProfile& profile,
                       std::size_t cap = kDefaultGridCap, int avg_k = 1);

std::vector<double> threshold_lattice(double step);

// Accuracy loss of `correct` out of `n` fits the budget, tolerant to rounding.
bool within_loss_budget(std::size_t correct, std::size_t n, double budget);

}  // namespace eesim

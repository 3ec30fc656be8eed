#include "eesim/threshold_tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eesim/errors.hpp"

namespace eesim {

void TunerParams::validate() const {
  if (!(min_step > 0.0 && min_step <= init_step && init_step <= 1.0))
    throw ParameterError("step sizes must satisfy 0 < min_step <= init_step <= 1");
  if (!(acc_loss_budget >= 0.0 && acc_loss_budget <= 1.0))
    throw ParameterError("accuracy loss budget must lie in [0,1]");
  if (accuracy_window < 1 || tuning_history < 1) throw ParameterError("windows must hold at least one sample");
  if (avg_k < 1) throw ParameterError("score averaging depth must be >= 1");
}

AccuracyMonitor::AccuracyMonitor(std::size_t window) : bits_(window, false) {
  if (window == 0) throw ParameterError("accuracy window must be >= 1");
}

void AccuracyMonitor::record(bool correct) {
  if (full() && bits_[head_]) --correct_;
  bits_[head_] = correct;
  if (correct) ++correct_;
  head_ = (head_ + 1) % bits_.size();
  if (count_ < bits_.size()) ++count_;
}

void AccuracyMonitor::clear() {
  std::fill(bits_.begin(), bits_.end(), false);
  head_ = count_ = correct_ = 0;
}

double AccuracyMonitor::accuracy() const {
  return count_ == 0 ? 1.0 : static_cast<double>(correct_) / static_cast<double>(count_);
}

bool should_trigger(const AccuracyMonitor& monitor, double constraint) {
  return monitor.full() && monitor.accuracy() < constraint;
}

bool within_loss_budget(std::size_t correct, std::size_t n, double budget) {
  const double loss = static_cast<double>(n - correct) / static_cast<double>(n);
  return loss <= budget + 1e-12;
}

TuneResult tune(std::span<const RequestRecord> history, std::span<const RampSite> ramps, const TunerParams& params,
                const ModelProfile& profile) {
  params.validate();
  TuneResult out;
  const std::size_t r = ramps.size();
  out.thresholds.assign(r, 0.0);
  if (r == 0 || history.empty()) return out;

  const WindowEvaluator eval(history, ramps, profile, 1, params.avg_k);
  const std::size_t n = eval.records();
  std::vector<double> steps(r, params.init_step);

  std::size_t cur_correct = 0;
  double cur_savings = 0.0;
  eval.evaluate_totals(out.thresholds, cur_correct, cur_savings);

  std::vector<double> trial = out.thresholds;
  while (true) {
    TuneRound round;
    round.steps = steps;

    std::optional<std::size_t> best;
    std::size_t best_correct = 0;
    double best_savings = 0.0;
    double best_ratio = 0.0;
    for (std::size_t j = 0; j < r; ++j) {
      if (out.thresholds[j] >= 1.0) {
        // Saturated: nothing left to explore on this ramp.
        steps[j] = params.min_step;
        continue;
      }
      trial = out.thresholds;
      trial[j] = std::min(1.0, out.thresholds[j] + steps[j]);
      std::size_t c = 0;
      double sav = 0.0;
      eval.evaluate_totals(trial, c, sav);
      if (!within_loss_budget(c, n, params.acc_loss_budget)) {
        round.overstepped.push_back(j);
        continue;
      }
      // An accuracy gain counts as zero loss.
      const double d_loss = static_cast<double>(cur_correct - std::min(cur_correct, c)) / n;
      const double d_sav = (sav - cur_savings) / n;
      const double ratio = d_loss == 0.0 ? std::numeric_limits<double>::infinity() : d_sav / d_loss;
      const bool better = !best || ratio > best_ratio || (ratio == best_ratio && sav > best_savings);
      if (better) {
        best = j;
        best_ratio = ratio;
        best_savings = sav;
        best_correct = c;
      }
    }
    round.chosen = best;

    if (best) {
      out.thresholds[*best] = std::min(1.0, out.thresholds[*best] + steps[*best]);
      steps[*best] *= 2.0;
      cur_correct = best_correct;
      cur_savings = best_savings;
    } else {
      const bool floored = std::all_of(steps.begin(), steps.end(),
                                       [&](double s) { return s <= params.min_step; });
      if (floored) {
        out.rounds.push_back(std::move(round));
        break;
      }
    }
    for (std::size_t j : round.overstepped) steps[j] = std::max(params.min_step, steps[j] / 2.0);
    out.rounds.push_back(std::move(round));
  }

  out.latency_savings_ms = cur_savings / static_cast<double>(n);
  out.accuracy = static_cast<double>(cur_correct) / static_cast<double>(n);
  return out;
}

std::vector<double> threshold_lattice(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ParameterError("grid step must lie in (0,1]");
  const auto count = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
  std::vector<double> values;
  values.reserve(count + 2);
  for (std::size_t i = 0; i <= count; ++i) values.push_back(std::min(1.0, static_cast<double>(i) * step));
  if (values.back() < 1.0 - 1e-12) values.push_back(1.0);
  values.back() = std::min(values.back(), 1.0);
  return values;
}

TuneResult grid_oracle(std::span<const RequestRecord> history, std::span<const RampSite> ramps,
                       double acc_loss_budget, double step, const ModelProfile& profile, std::size_t cap,
                       int avg_k) {
  const auto lattice = threshold_lattice(step);
  const std::size_t r = ramps.size();
  double points = 1.0;
  for (std::size_t j = 0; j < r; ++j) points *= static_cast<double>(lattice.size());
  if (points > static_cast<double>(cap))
    throw ExplosionCapError("grid of " + std::to_string(static_cast<long double>(points)) +
                            " configurations exceeds the cap of " + std::to_string(cap));

  TuneResult out;
  out.thresholds.assign(r, 0.0);
  if (r == 0 || history.empty()) return out;

  const WindowEvaluator eval(history, ramps, profile, 1, avg_k);
  const std::size_t n = eval.records();
  std::vector<std::size_t> idx(r, 0);
  std::vector<double> th(r, lattice[0]);
  bool found = false;
  std::size_t best_correct = 0;
  double best_savings = 0.0;
  // Odometer over the lattice in lexicographic order; strict improvement keeps
  // the lexicographically smallest argmax.
  while (true) {
    std::size_t c = 0;
    double sav = 0.0;
    eval.evaluate_totals(th, c, sav);
    if (within_loss_budget(c, n, acc_loss_budget) && (!found || sav > best_savings)) {
      found = true;
      best_savings = sav;
      best_correct = c;
      out.thresholds = th;
    }
    std::size_t d = r;
    while (d > 0) {
      --d;
      if (++idx[d] < lattice.size()) {
        th[d] = lattice[idx[d]];
        break;
      }
      idx[d] = 0;
      th[d] = lattice[0];
      if (d == 0) {
        d = r + 1;  // wrapped the most significant digit
        break;
      }
    }
    if (d == r + 1) break;
  }
  out.latency_savings_ms = best_savings / static_cast<double>(n);
  out.accuracy = static_cast<double>(best_correct) / static_cast<double>(n);
  return out;
}

}  // namespace eesim

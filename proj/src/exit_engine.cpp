#include "eesim/exit_engine.hpp"

#include <sstream>

#include "eesim/errors.hpp"

namespace eesim {

std::vector<RampSite> EEConfig::sites() const {
  std::vector<RampSite> out;
  out.reserve(ramps.size());
  for (const auto& r : ramps) out.push_back(r.site);
  return out;
}

std::vector<double> EEConfig::thresholds() const {
  std::vector<double> out;
  out.reserve(ramps.size());
  for (const auto& r : ramps) out.push_back(r.threshold);
  return out;
}

double EEConfig::overhead_ms(int batch) const {
  double sum = 0.0;
  for (const auto& r : ramps) sum += r.site.ramp_ms(batch);
  return sum;
}

std::size_t EEConfig::position_of(const LayerId& layer) const {
  for (std::size_t i = 0; i < ramps.size(); ++i)
    if (ramps[i].site.layer == layer) return i;
  return ramps.size();
}

void check_config(const EEConfig& config) {
  for (std::size_t i = 0; i < config.ramps.size(); ++i) {
    const auto& r = config.ramps[i];
    if (!(r.threshold >= 0.0 && r.threshold <= 1.0)) {
      std::ostringstream msg;
      msg << "threshold " << r.threshold << " at '" << r.site.layer << "' is outside [0,1]";
      throw ParameterError(msg.str());
    }
    if (i > 0 && config.ramps[i - 1].site.topo_index >= r.site.topo_index)
      throw ParameterError("active ramps are not strictly ordered at '" + r.site.layer + "'");
  }
}

void check_config(const EEConfig& config, const RampBudget& budget, const ModelProfile& profile) {
  check_config(config);
  if (!budget.admits(config.overhead_ms(1), profile)) {
    std::ostringstream msg;
    msg << "active ramps cost " << config.overhead_ms(1) << " ms, above the budget cap of "
        << budget.cap_ms(profile) << " ms";
    throw ParameterError(msg.str());
  }
}

namespace {

// Effective exit scores for each active ramp, in order.
template <typename ErrAt>
void running_scores(std::size_t count, int avg_k, ErrAt err_at, std::vector<double>& out) {
  out.resize(count);
  const std::size_t k = static_cast<std::size_t>(avg_k < 1 ? 1 : avg_k);
  for (std::size_t j = 0; j < count; ++j) {
    if (k == 1) {
      out[j] = err_at(j);
      continue;
    }
    const std::size_t first = j + 1 >= k ? j + 1 - k : 0;
    double sum = 0.0;
    for (std::size_t i = first; i <= j; ++i) sum += err_at(i);
    out[j] = sum / static_cast<double>(j - first + 1);
  }
}

}  // namespace

ExitOutcome evaluate_record(const RequestRecord& record, const EEConfig& config, const ModelProfile& profile,
                            int batch, int avg_k) {
  std::vector<double> scores;
  running_scores(config.ramps.size(), avg_k,
                 [&](std::size_t i) { return record.signal(config.ramps[i].site.layer).err; }, scores);
  ExitOutcome out;
  double overhead = 0.0;
  for (std::size_t j = 0; j < config.ramps.size(); ++j) {
    const auto& ramp = config.ramps[j];
    overhead += ramp.site.ramp_ms(batch);
    if (scores[j] < ramp.threshold) {
      const auto& sig = record.signal(ramp.site.layer);
      out.exit_site = ramp.site.layer;
      out.exit_ramp = j;
      out.released_label = sig.label;
      out.correct = sig.label == record.final_label;
      out.serve_ms = ramp.site.prefix_ms(batch) + overhead;
      return out;
    }
  }
  out.released_label = record.final_label;
  out.correct = true;
  out.serve_ms = profile.total_ms(batch) + overhead;
  return out;
}

WindowEvaluator::WindowEvaluator(std::span<const RequestRecord> records, std::span<const RampSite> ramps,
                                 const ModelProfile& profile, int batch, int avg_k)
    : n_(records.size()), r_(ramps.size()), vanilla_ms_(profile.total_ms(batch)) {
  score_.resize(n_ * r_);
  agree_.resize(n_ * r_);
  std::vector<double> row;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto& rec = records[i];
    running_scores(r_, avg_k, [&](std::size_t j) { return rec.signal(ramps[j].layer).err; }, row);
    for (std::size_t j = 0; j < r_; ++j) {
      score_[i * r_ + j] = row[j];
      agree_[i * r_ + j] = rec.signal(ramps[j].layer).label == rec.final_label ? 1 : 0;
    }
  }
  exit_savings_.resize(r_);
  double overhead = 0.0;
  for (std::size_t j = 0; j < r_; ++j) {
    overhead += ramps[j].ramp_ms(batch);
    exit_savings_[j] = vanilla_ms_ - (ramps[j].prefix_ms(batch) + overhead);
  }
  no_exit_savings_ = vanilla_ms_ - (vanilla_ms_ + overhead);
}

WindowEvaluator::Stats WindowEvaluator::evaluate(std::span<const double> thresholds) const {
  Stats s;
  s.exits.assign(r_, 0);
  for (std::size_t i = 0; i < n_; ++i) {
    const double* score = &score_[i * r_];
    std::size_t j = 0;
    while (j < r_ && !(score[j] < thresholds[j])) ++j;
    if (j == r_) {
      ++s.correct;
      s.savings_sum_ms += no_exit_savings_;
    } else {
      s.correct += agree_[i * r_ + j];
      s.savings_sum_ms += exit_savings_[j];
      ++s.exits[j];
    }
  }
  return s;
}

void WindowEvaluator::evaluate_totals(std::span<const double> thresholds, std::size_t& correct,
                                      double& savings_sum) const {
  std::size_t c = 0;
  double sav = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double* score = &score_[i * r_];
    std::size_t j = 0;
    while (j < r_ && !(score[j] < thresholds[j])) ++j;
    if (j == r_) {
      ++c;
      sav += no_exit_savings_;
    } else {
      c += agree_[i * r_ + j];
      sav += exit_savings_[j];
    }
  }
  correct = c;
  savings_sum = sav;
}

WindowResult evaluate_window(std::span<const RequestRecord> records, const EEConfig& config,
                             const ModelProfile& profile, int avg_k) {
  if (records.empty()) throw DomainError("cannot evaluate an empty window");
  const auto sites = config.sites();
  WindowEvaluator eval(records, sites, profile, 1, avg_k);
  const auto thresholds = config.thresholds();
  const auto stats = eval.evaluate(thresholds);
  const double n = static_cast<double>(records.size());
  WindowResult out;
  out.accuracy = static_cast<double>(stats.correct) / n;
  out.mean_savings_ms = stats.savings_sum_ms / n;
  for (std::size_t j = 0; j < sites.size(); ++j) out.exit_rate[sites[j].layer] = stats.exits[j] / n;
  return out;
}

std::optional<LayerId> optimal_exit(const RequestRecord& record, std::span<const RampSite> sites) {
  for (const auto& site : sites)
    if (record.signal(site.layer).label == record.final_label) return site.layer;
  return std::nullopt;
}

}  // namespace eesim

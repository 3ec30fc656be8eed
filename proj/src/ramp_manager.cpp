#include "eesim/ramp_manager.hpp"

#include <algorithm>
#include <cmath>

#include "eesim/errors.hpp"

namespace eesim {

bool UtilityReport::any_negative() const {
  return std::any_of(ramps.begin(), ramps.end(), [](const RampUtility& u) { return u.utility_ms < 0.0; });
}

std::string to_string(AdjustAction action) {
  switch (action) {
    case AdjustAction::none: return "none";
    case AdjustAction::retuned: return "retuned";
    case AdjustAction::deactivated: return "deactivated";
    case AdjustAction::added: return "added";
    case AdjustAction::shifted: return "shifted";
  }
  return "none";
}

UtilityReport score_utilities(std::span<const PeriodSample> period, const EEConfig& config,
                              const ModelProfile& profile) {
  if (period.empty()) throw DomainError("cannot score utilities over an empty period");
  UtilityReport rep;
  rep.period_len = period.size();
  rep.ramps.resize(config.size());
  std::vector<std::size_t> exits(config.size(), 0);
  for (std::size_t j = 0; j < config.size(); ++j) rep.ramps[j].site = config.ramps[j].site.layer;

  double net = 0.0;
  for (const auto& sample : period) {
    const auto& out = sample.outcome;
    const double vanilla = profile.total_ms(sample.batch);
    std::size_t e = config.size();
    if (out.exit_site) {
      e = config.position_of(*out.exit_site);
      if (e == config.size())
        throw DomainError("outcome exits at '" + *out.exit_site + "', which is not an active ramp");
    }
    net += vanilla - out.serve_ms;
    for (std::size_t j = 0; j < config.size(); ++j) {
      if (j == e) {
        rep.ramps[j].savings_ms += vanilla - out.serve_ms;
        ++exits[j];
      } else if (j < e) {
        rep.ramps[j].overheads_ms += config.ramps[j].site.ramp_ms(sample.batch);
      }
    }
  }
  const double n = static_cast<double>(period.size());
  for (std::size_t j = 0; j < config.size(); ++j) {
    auto& u = rep.ramps[j];
    u.exit_rate = exits[j] / n;
    u.utility_ms = u.savings_ms - u.overheads_ms;
  }
  rep.mean_savings_ms = net / n;
  return rep;
}

double upper_bound_exit_rate(const DeactivationLedger& ledger, std::size_t topo) {
  double rate = 0.0;
  for (const auto& d : ledger) {
    rate += d.exit_rate;
    if (d.site.topo_index >= topo) break;
  }
  return std::min(rate, 1.0);
}

std::optional<Candidate> propose_candidate(const DeactivationLedger& ledger,
                                           std::optional<std::size_t> latest_positive_topo,
                                           std::span<const RampSite> sites, const ModelProfile& profile,
                                           std::size_t period_len, double max_ramp_ms) {
  if (ledger.empty() || sites.empty()) return std::nullopt;

  auto deactivated = [&](const RampSite& s) {
    return std::any_of(ledger.begin(), ledger.end(), [&](const Deactivation& d) { return d.site.layer == s.layer; });
  };

  // Intervals of candidate sites after P, delimited by deactivated sites.
  std::vector<std::vector<std::size_t>> intervals(1);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (latest_positive_topo && sites[i].topo_index <= *latest_positive_topo) continue;
    if (deactivated(sites[i])) {
      if (!intervals.back().empty()) intervals.emplace_back();
      continue;
    }
    intervals.back().push_back(i);
  }
  if (intervals.back().empty()) intervals.pop_back();
  if (intervals.empty()) return std::nullopt;

  const double vanilla = profile.total_ms(1);
  const double n = static_cast<double>(period_len);
  auto score = [&](const RampSite& s) {
    Candidate c;
    c.site = s;
    c.exit_rate_bound = upper_bound_exit_rate(ledger, s.topo_index);
    const double per_exit = vanilla - s.prefix_ms(1);
    c.utility_bound_ms = c.exit_rate_bound * n * per_exit - (1.0 - c.exit_rate_bound) * n * s.ramp_ms(1);
    return c;
  };

  struct Cursor {
    std::size_t pos;     // current candidate within the interval
    std::size_t rounds;  // refinement rounds still allowed
  };
  std::vector<Cursor> cursors;
  for (const auto& iv : intervals) {
    const std::size_t m = iv.size();
    const auto limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(m))));
    cursors.push_back({(m - 1) / 2, limit});
  }

  while (true) {
    std::optional<Candidate> best;
    for (std::size_t k = 0; k < intervals.size(); ++k) {
      const auto& site = sites[intervals[k][cursors[k].pos]];
      if (site.ramp_ms(1) > max_ramp_ms + 1e-9 * std::max(1.0, max_ramp_ms)) continue;
      auto c = score(site);
      if (c.utility_bound_ms > 0.0 && (!best || c.utility_bound_ms > best->utility_bound_ms)) best = std::move(c);
    }
    if (best) return best;

    bool advanced = false;
    for (std::size_t k = 0; k < intervals.size(); ++k) {
      auto& cur = cursors[k];
      const std::size_t last = intervals[k].size() - 1;
      if (cur.rounds == 0 || cur.pos >= last) continue;
      cur.pos = cur.pos + 1 + (last - cur.pos - 1) / 2;
      --cur.rounds;
      advanced = true;
    }
    if (!advanced) return std::nullopt;
  }
}

namespace {

std::vector<PeriodSample> replay(std::span<const RequestRecord> history, const EEConfig& config,
                                 const ModelProfile& profile, int avg_k) {
  std::vector<PeriodSample> samples;
  samples.reserve(history.size());
  for (const auto& rec : history) samples.push_back({evaluate_record(rec, config, profile, 1, avg_k), 1});
  return samples;
}

std::size_t argmax_utility(const UtilityReport& report) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < report.ramps.size(); ++j)
    if (report.ramps[j].utility_ms > report.ramps[best].utility_ms) best = j;
  return best;
}

void insert_ordered(EEConfig& config, const RampSite& site) {
  auto pos = std::find_if(config.ramps.begin(), config.ramps.end(),
                          [&](const ActiveRamp& r) { return r.site.topo_index > site.topo_index; });
  config.ramps.insert(pos, ActiveRamp{site, 0.0});
}

}  // namespace

AdjustResult adjust(const UtilityReport& report, const EEConfig& config, std::span<const RampSite> sites,
                    const RampBudget& budget, std::span<const RequestRecord> history, const TunerParams& params,
                    const ModelProfile& profile) {
  AdjustResult res;
  res.config = config;
  if (sites.empty()) return res;

  if (config.empty()) {
    // Nothing to score. Reseed with a single mid-model ramp if it fits.
    const auto& site = sites[even_spacing(sites.size(), 1).front()];
    if (budget.admits(site.ramp_ms(1), profile)) {
      insert_ordered(res.config, site);
      res.action = AdjustAction::added;
      res.added = site.layer;
    }
    return res;
  }
  if (report.ramps.size() != config.size()) throw DomainError("utility report does not match the configuration");

  if (report.any_negative()) {
    if (!history.empty()) {
      const auto tuned = tune(history, config.sites(), params, profile);
      EEConfig retuned = config;
      for (std::size_t j = 0; j < retuned.size(); ++j) retuned.ramps[j].threshold = tuned.thresholds[j];
      const auto samples = replay(history, retuned, profile, params.avg_k);
      const auto after = score_utilities(samples, retuned, profile);
      if (!after.any_negative() && after.mean_savings_ms >= report.mean_savings_ms) {
        res.config = std::move(retuned);
        res.action = AdjustAction::retuned;
        return res;
      }
    }

    EEConfig survivors;
    for (std::size_t j = 0; j < config.size(); ++j) {
      if (report.ramps[j].utility_ms < 0.0)
        res.ledger.push_back({config.ramps[j].site, report.ramps[j].exit_rate});
      else
        survivors.ramps.push_back(config.ramps[j]);
    }
    std::optional<std::size_t> latest;
    if (!survivors.empty()) latest = survivors.ramps.back().site.topo_index;
    const double room = budget.cap_ms(profile) - survivors.overhead_ms(1);
    res.trial = propose_candidate(res.ledger, latest, sites, profile, report.period_len, room);
    res.config = std::move(survivors);
    if (res.trial) insert_ordered(res.config, res.trial->site);
    res.action = AdjustAction::deactivated;
    return res;
  }

  // Every ramp pays for itself: probe earlier positions.
  const std::size_t hi = argmax_utility(report);
  const double overhead = config.overhead_ms(1);
  const std::size_t hi_site = find_site(sites, config.ramps[hi].site.layer);
  if (hi_site > 0 && hi_site < sites.size()) {
    const auto& before = sites[hi_site - 1];
    if (config.position_of(before.layer) == config.size() && budget.admits(overhead + before.ramp_ms(1), profile)) {
      insert_ordered(res.config, before);
      res.action = AdjustAction::added;
      res.added = before.layer;
      return res;
    }
  }

  if (config.size() < 2) return res;
  std::optional<std::size_t> lo;
  for (std::size_t j = 0; j < config.size(); ++j) {
    if (j == hi) continue;
    if (!lo || report.ramps[j].utility_ms < report.ramps[*lo].utility_ms) lo = j;
  }
  const auto& moving = config.ramps[*lo].site;
  const std::size_t lo_site = find_site(sites, moving.layer);
  if (lo_site == 0 || lo_site >= sites.size()) return res;
  const auto& target = sites[lo_site - 1];
  if (config.position_of(target.layer) != config.size()) return res;
  if (!budget.admits(overhead - moving.ramp_ms(1) + target.ramp_ms(1), profile)) return res;
  res.config.ramps[*lo] = ActiveRamp{target, 0.0};
  res.action = AdjustAction::shifted;
  res.shifted_from = moving.layer;
  res.shifted_to = target.layer;
  return res;
}

}  // namespace eesim

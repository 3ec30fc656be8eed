#include "eesim/serving_sim.hpp"

#include <algorithm>
#include <deque>

#include "eesim/errors.hpp"

namespace eesim {

std::string to_string(ServingMode mode) {
  switch (mode) {
    case ServingMode::vanilla: return "vanilla";
    case ServingMode::adaptive: return "adaptive";
    case ServingMode::optimal: return "optimal";
  }
  return "adaptive";
}

ServingMode parse_mode(const std::string& name) {
  if (name == "vanilla") return ServingMode::vanilla;
  if (name == "adaptive") return ServingMode::adaptive;
  if (name == "optimal") return ServingMode::optimal;
  throw ParameterError("unknown serving mode '" + name + "'");
}

void ServingParams::validate() const {
  if (!(slo_ms > 0.0)) throw ParameterError("SLO must be positive");
  if (max_batch < 1) throw ParameterError("max batch size must be >= 1");
  if (!(acc_constraint >= 0.0 && acc_constraint <= 1.0)) throw ParameterError("accuracy constraint must lie in [0,1]");
  if (!(budget.fraction >= 0.0 && budget.fraction <= 1.0)) throw ParameterError("ramp budget must lie in [0,1]");
  if (ramp_period < 1) throw ParameterError("ramp period must be >= 1");
  tuner.validate();
}

namespace {

EEConfig starting_config(const Workload& workload, const ModelProfile& profile, std::span<const RampSite> sites,
                         const ServingParams& params) {
  if (params.mode != ServingMode::adaptive) return {};
  EEConfig cfg;
  if (params.initial_config)
    cfg = *params.initial_config;
  else if (!sites.empty())
    cfg = initial_placement(sites, params.budget, profile);
  if (params.initial_tune && !cfg.empty() && !workload.records.empty()) {
    const std::size_t take = std::min(params.tuner.tuning_history, workload.records.size());
    const std::span<const RequestRecord> sample(workload.records.data(), take);
    const auto tuned = tune(sample, cfg.sites(), params.tuner, profile);
    for (std::size_t j = 0; j < cfg.size(); ++j) cfg.ramps[j].threshold = tuned.thresholds[j];
  }
  return cfg;
}

}  // namespace

SimReport run(const Workload& workload, const ModelProfile& profile, const ServingParams& params) {
  params.validate();
  const auto sites = find_feasible_sites(profile);
  const auto& records = workload.records;

  SimReport rep;
  rep.mode = params.mode;
  rep.initial_config = starting_config(workload, profile, sites, params);

  ControllerParams cp;
  cp.tuner = params.tuner;
  cp.acc_constraint = params.acc_constraint;
  cp.budget = params.budget;
  cp.ramp_period = params.ramp_period;
  cp.adaptation_enabled = params.adaptation_enabled && params.mode == ServingMode::adaptive;
  cp.ramp_adjust_enabled = params.ramp_adjust_enabled;
  Controller controller(profile, sites, rep.initial_config, cp);

  rep.requests.resize(records.size());
  std::deque<std::size_t> queue;
  std::size_t next = 0;
  double server_free = 0.0;
  double last_done = 0.0;
  std::vector<std::size_t> served_order;
  served_order.reserve(records.size());

  while (next < records.size() || !queue.empty()) {
    if (queue.empty()) queue.push_back(next++);
    const double start = std::max(server_free, records[queue.front()].arrival_ms);
    while (next < records.size() && records[next].arrival_ms <= start) queue.push_back(next++);

    if (params.drop_late) {
      while (!queue.empty() && start - records[queue.front()].arrival_ms > params.slo_ms) {
        auto& res = rep.requests[queue.front()];
        res.id = records[queue.front()].id;
        res.arrival_ms = records[queue.front()].arrival_ms;
        res.dropped = true;
        res.slo_violated = true;
        queue.pop_front();
      }
      if (queue.empty()) continue;
    }

    const int batch = static_cast<int>(std::min<std::size_t>(queue.size(), static_cast<std::size_t>(params.max_batch)));
    const auto cfg = controller.snapshot();
    const double busy = profile.total_ms(batch) + cfg->overhead_ms(batch);

    std::vector<std::pair<std::size_t, ExitOutcome>> done;
    done.reserve(static_cast<std::size_t>(batch));
    for (int k = 0; k < batch; ++k) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const auto& rec = records[i];
      ExitOutcome out;
      switch (params.mode) {
        case ServingMode::adaptive:
          out = evaluate_record(rec, *cfg, profile, batch, params.tuner.avg_k);
          break;
        case ServingMode::vanilla:
          out.released_label = rec.final_label;
          out.serve_ms = profile.total_ms(batch);
          break;
        case ServingMode::optimal: {
          out.released_label = rec.final_label;
          out.exit_site = optimal_exit(rec, sites);
          out.serve_ms = out.exit_site ? profile.prefix_ms(profile.index_of(*out.exit_site), batch)
                                       : profile.total_ms(batch);
          break;
        }
      }
      auto& res = rep.requests[i];
      res.id = rec.id;
      res.arrival_ms = rec.arrival_ms;
      res.queue_ms = start - rec.arrival_ms;
      res.serve_ms = out.serve_ms;
      res.total_ms = res.queue_ms + res.serve_ms;
      res.exit_site = out.exit_site;
      res.correct = out.correct;
      res.slo_violated = res.total_ms > params.slo_ms;
      res.batch = batch;
      served_order.push_back(i);
      done.emplace_back(i, std::move(out));
    }

    server_free = start + busy;
    last_done = server_free;
    rep.busy_ms += busy;
    ++rep.batches;
    for (const auto& [i, out] : done) controller.observe(records[i], out, *cfg, batch, server_free);
  }

  std::vector<double> totals;
  std::size_t correct = 0;
  const std::size_t window = params.tuner.accuracy_window;
  std::size_t in_window = 0, window_correct = 0;
  for (std::size_t i : served_order) {
    const auto& res = rep.requests[i];
    totals.push_back(res.total_ms);
    if (res.correct) ++correct;
    if (res.slo_violated) ++rep.slo_violations;
    ++in_window;
    if (res.correct) ++window_correct;
    if (in_window == window) {
      rep.window_accuracy.push_back(static_cast<double>(window_correct) / static_cast<double>(window));
      in_window = window_correct = 0;
    }
  }
  for (const auto& res : rep.requests)
    if (res.dropped) ++rep.dropped, ++rep.slo_violations;

  rep.accuracy = totals.empty() ? 1.0 : static_cast<double>(correct) / static_cast<double>(totals.size());
  rep.latency = summarize(totals);
  if (!records.empty()) rep.makespan_ms = last_done - records.front().arrival_ms;
  rep.throughput_rps = rep.makespan_ms > 0.0 ? 1000.0 * static_cast<double>(totals.size()) / rep.makespan_ms : 0.0;
  rep.events = controller.events();
  rep.final_config = *controller.snapshot();
  rep.control_seconds = controller.control_seconds();
  return rep;
}

ComparisonReport compare_baselines(const Workload& workload, const ModelProfile& profile,
                                   const ServingParams& params) {
  ComparisonReport out;
  ServingParams p = params;
  p.mode = ServingMode::vanilla;
  out.vanilla = run(workload, profile, p);
  p.mode = ServingMode::adaptive;
  out.adaptive = run(workload, profile, p);
  p.mode = ServingMode::optimal;
  out.optimal = run(workload, profile, p);
  return out;
}

}  // namespace eesim

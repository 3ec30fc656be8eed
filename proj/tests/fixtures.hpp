#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "eesim/exit_engine.hpp"
#include "eesim/model_graph.hpp"
#include "eesim/trace.hpp"

namespace eesim::testing {

// Chain L0 -> L1 -> ... -> L{n-1}; the last layer is the output.
inline ModelProfile chain_profile(const std::vector<double>& layer_ms, double ramp_ms,
                                  const std::string& name = "chain") {
  std::vector<LayerId> nodes;
  std::vector<Edge> edges;
  std::map<LayerId, BatchCurve> lat, ramp;
  for (std::size_t i = 0; i < layer_ms.size(); ++i) {
    nodes.push_back("L" + std::to_string(i));
    lat.emplace(nodes.back(), BatchCurve::constant(layer_ms[i]));
    if (i + 1 < layer_ms.size()) ramp.emplace(nodes.back(), BatchCurve::constant(ramp_ms));
    if (i > 0) edges.push_back({nodes[i - 1], nodes[i]});
  }
  return ModelProfile(name, nodes, edges, lat, ramp, nodes.back());
}

// Chain whose layer and ramp costs grow with batch size.
inline ModelProfile batched_chain_profile(std::size_t layers, double layer_ms, double ramp_ms,
                                          double layer_slope, double ramp_slope) {
  std::vector<LayerId> nodes;
  std::vector<Edge> edges;
  std::map<LayerId, BatchCurve> lat, ramp;
  for (std::size_t i = 0; i < layers; ++i) {
    nodes.push_back("L" + std::to_string(i));
    lat.emplace(nodes.back(), BatchCurve({{1, layer_ms}, {16, layer_ms * (1.0 + 15.0 * layer_slope)}}));
    if (i + 1 < layers)
      ramp.emplace(nodes.back(), BatchCurve({{1, ramp_ms}, {16, ramp_ms * (1.0 + 15.0 * ramp_slope)}}));
    if (i > 0) edges.push_back({nodes[i - 1], nodes[i]});
  }
  return ModelProfile("batched", nodes, edges, lat, ramp, nodes.back());
}

inline RequestRecord make_record(std::int64_t id, double arrival, std::map<LayerId, RampSignal> ramps,
                                 std::int64_t final_label = 0) {
  RequestRecord r;
  r.id = id;
  r.arrival_ms = arrival;
  r.ramps = std::move(ramps);
  r.final_label = final_label;
  return r;
}

inline EEConfig make_config(const std::vector<RampSite>& sites, const std::vector<std::size_t>& which,
                            const std::vector<double>& thresholds) {
  EEConfig cfg;
  for (std::size_t k = 0; k < which.size(); ++k) cfg.ramps.push_back({sites[which[k]], thresholds[k]});
  return cfg;
}

// Random records over `sites`: each ramp agrees with the final label with
// probability `agree`, error scores uniform.
inline std::vector<RequestRecord> random_records(const std::vector<RampSite>& sites, std::size_t n, double agree,
                                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RequestRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    RequestRecord r;
    r.id = static_cast<std::int64_t>(i);
    r.arrival_ms = static_cast<double>(i);
    r.final_label = 1;
    for (const auto& s : sites) {
      const bool ok = u(rng) < agree;
      r.ramps[s.layer] = RampSignal{u(rng), ok ? 1 : 2};
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace eesim::testing

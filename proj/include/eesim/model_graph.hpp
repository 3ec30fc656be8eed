#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "eesim/batch_curve.hpp"

namespace eesim {

using LayerId = std::string;

struct Edge {
  LayerId from;
  LayerId to;
};

// Layer DAG with per-layer latency profiles. Nodes are stored in the order
// given, which must be a topological order. Layers execute serially, so the
// model time up to a layer is the sum over its topological prefix.
class ModelProfile {
 public:
  ModelProfile(std::string name, std::vector<LayerId> nodes, std::vector<Edge> edges,
               std::map<LayerId, BatchCurve> layer_latency,
               std::map<LayerId, BatchCurve> ramp_latency, LayerId output);

  const std::string& name() const { return name_; }
  const std::vector<LayerId>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const LayerId& output() const { return output_; }
  const std::map<LayerId, BatchCurve>& layer_latency() const { return layer_latency_; }
  const std::map<LayerId, BatchCurve>& ramp_latency() const { return ramp_latency_; }

  std::size_t size() const { return nodes_.size(); }
  bool contains(const LayerId& id) const { return index_.count(id) != 0; }
  // Topological position of a layer; throws StructuralError for unknown ids.
  std::size_t index_of(const LayerId& id) const;

  const std::vector<std::vector<std::size_t>>& successors() const { return succ_; }
  const std::vector<std::vector<std::size_t>>& predecessors() const { return pred_; }

  double total_ms(int batch) const;
  // Model time through the layer at topological position `index`, inclusive.
  double prefix_ms(std::size_t index, int batch) const;
  BatchCurve prefix_curve(std::size_t index) const;
  BatchCurve total_curve() const;

 private:
  std::string name_;
  std::vector<LayerId> nodes_;
  std::vector<Edge> edges_;
  std::map<LayerId, BatchCurve> layer_latency_;
  std::map<LayerId, BatchCurve> ramp_latency_;
  LayerId output_;

  std::map<LayerId, std::size_t> index_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
  std::vector<int> knots_;
  // prefix_[b][i] = model time through node i at knot batch knots_[b]
  std::vector<std::vector<double>> prefix_;
};

// A feasible ramp position with its latency profile attached.
struct RampSite {
  LayerId layer;
  std::size_t topo_index = 0;
  BatchCurve ramp_latency;
  BatchCurve prefix_latency;

  double ramp_ms(int batch) const { return ramp_latency.at(batch); }
  double prefix_ms(int batch) const { return prefix_latency.at(batch); }
};

// Cap on summed active-ramp latency as a fraction of no-exit model latency,
// both measured at batch size 1.
struct RampBudget {
  double fraction = 0.02;

  double cap_ms(const ModelProfile& profile) const { return fraction * profile.total_ms(1); }
  bool admits(double ramp_ms_total, const ModelProfile& profile) const;
};

// Layers through which every source-to-output path passes, in topological
// order. The output itself is never included.
std::vector<LayerId> cut_vertices(const ModelProfile& profile);

// Cut vertices with their ramp and prefix latency curves attached. Every cut
// vertex must have a ramp latency entry in the profile.
std::vector<RampSite> find_feasible_sites(const ModelProfile& profile);

struct EEConfig;

// Largest evenly spaced ramp set over `sites` that fits the budget, all
// thresholds 0. Returns an empty config when not even one ramp fits.
EEConfig initial_placement(std::span<const RampSite> sites, const RampBudget& budget,
                           const ModelProfile& profile);

// Indices round(i*(n-1)/(k-1)) for i in [0, k); k == 1 picks the middle.
std::vector<std::size_t> even_spacing(std::size_t n, std::size_t k);

// Position of `layer` in `sites`, or sites.size() when absent.
std::size_t find_site(std::span<const RampSite> sites, const LayerId& layer);

}  // namespace eesim

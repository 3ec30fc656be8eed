#include "eesim/model_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "eesim/errors.hpp"
#include "eesim/exit_engine.hpp"

namespace eesim {
namespace {

bool has_cycle(std::size_t n, const std::vector<std::vector<std::size_t>>& succ) {
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& out : succ)
    for (std::size_t v : out) ++indeg[v];
  std::deque<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  std::size_t seen = 0;
  while (!ready.empty()) {
    std::size_t u = ready.front();
    ready.pop_front();
    ++seen;
    for (std::size_t v : succ[u])
      if (--indeg[v] == 0) ready.push_back(v);
  }
  return seen != n;
}

}  // namespace

ModelProfile::ModelProfile(std::string name, std::vector<LayerId> nodes, std::vector<Edge> edges,
                           std::map<LayerId, BatchCurve> layer_latency,
                           std::map<LayerId, BatchCurve> ramp_latency, LayerId output)
    : name_(std::move(name)),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      layer_latency_(std::move(layer_latency)),
      ramp_latency_(std::move(ramp_latency)),
      output_(std::move(output)) {
  if (nodes_.empty()) throw StructuralError("model graph has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i], i).second)
      throw StructuralError("duplicate node id '" + nodes_[i] + "'");
  }
  if (!index_.count(output_)) throw StructuralError("output node '" + output_ + "' is not a graph node");

  const std::size_t n = nodes_.size();
  succ_.assign(n, {});
  pred_.assign(n, {});
  bool ordered = true;
  for (const auto& e : edges_) {
    auto from = index_.find(e.from);
    auto to = index_.find(e.to);
    if (from == index_.end()) throw StructuralError("edge references unknown node '" + e.from + "'");
    if (to == index_.end()) throw StructuralError("edge references unknown node '" + e.to + "'");
    succ_[from->second].push_back(to->second);
    pred_[to->second].push_back(from->second);
    if (from->second >= to->second) ordered = false;
  }
  for (auto& v : succ_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  for (auto& v : pred_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  if (!ordered) {
    if (has_cycle(n, succ_)) throw StructuralError("model graph contains a cycle");
    throw StructuralError("node list is not in topological order");
  }

  // Every node must reach the output.
  std::vector<bool> reaches(n, false);
  std::deque<std::size_t> frontier{index_.at(output_)};
  reaches[frontier.front()] = true;
  while (!frontier.empty()) {
    std::size_t v = frontier.front();
    frontier.pop_front();
    for (std::size_t u : pred_[v])
      if (!reaches[u]) {
        reaches[u] = true;
        frontier.push_back(u);
      }
  }
  for (std::size_t v = 0; v < n; ++v)
    if (!reaches[v]) throw StructuralError("output is unreachable from node '" + nodes_[v] + "'");

  std::set<int> knots;
  for (const auto& id : nodes_) {
    auto it = layer_latency_.find(id);
    if (it == layer_latency_.end()) throw StructuralError("no latency profile for layer '" + id + "'");
    if (auto why = it->second.check_latency_invariants(); !why.empty())
      throw StructuralError("layer '" + id + "': " + why);
    for (int b : it->second.batches()) knots.insert(b);
  }
  for (const auto& [id, curve] : layer_latency_)
    if (!index_.count(id)) throw StructuralError("latency given for unknown layer '" + id + "'");
  for (const auto& [id, curve] : ramp_latency_) {
    if (!index_.count(id)) throw StructuralError("ramp latency given for unknown layer '" + id + "'");
    if (auto why = curve.check_latency_invariants(); !why.empty())
      throw StructuralError("ramp at '" + id + "': " + why);
  }

  knots_.assign(knots.begin(), knots.end());
  prefix_.assign(knots_.size(), std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += layer_latency_.at(nodes_[i]).at(knots_[k]);
      prefix_[k][i] = acc;
    }
  }
}

std::size_t ModelProfile::index_of(const LayerId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw StructuralError("unknown layer '" + id + "'");
  return it->second;
}

double ModelProfile::prefix_ms(std::size_t index, int batch) const {
  // Each layer curve is linear between knots, so interpolating the summed
  // prefix on the union of knots is exact.
  auto hi = std::lower_bound(knots_.begin(), knots_.end(), batch);
  if (hi == knots_.end()) return prefix_.back()[index];
  const auto k = static_cast<std::size_t>(hi - knots_.begin());
  if (*hi == batch || k == 0) return prefix_[k][index];
  const double w = static_cast<double>(batch - knots_[k - 1]) / (knots_[k] - knots_[k - 1]);
  return prefix_[k - 1][index] + w * (prefix_[k][index] - prefix_[k - 1][index]);
}

double ModelProfile::total_ms(int batch) const { return prefix_ms(nodes_.size() - 1, batch); }

BatchCurve ModelProfile::prefix_curve(std::size_t index) const {
  std::map<int, double> pts;
  for (std::size_t k = 0; k < knots_.size(); ++k) pts[knots_[k]] = prefix_[k][index];
  return BatchCurve(std::move(pts));
}

BatchCurve ModelProfile::total_curve() const { return prefix_curve(nodes_.size() - 1); }

bool RampBudget::admits(double ramp_ms_total, const ModelProfile& profile) const {
  const double cap = cap_ms(profile);
  return ramp_ms_total <= cap + 1e-9 * std::max(1.0, cap);
}

std::vector<LayerId> cut_vertices(const ModelProfile& profile) {
  // Immediate dominators from a virtual root attached to every source. Node
  // order is topological, so one forward pass suffices on a DAG.
  const std::size_t n = profile.size();
  const std::size_t root = n;
  std::vector<std::size_t> idom(n + 1, root);
  std::vector<std::size_t> depth(n + 1, 0);
  const auto& pred = profile.predecessors();
  auto intersect = [&](std::size_t a, std::size_t b) {
    while (a != b) {
      if (depth[a] < depth[b]) std::swap(a, b);
      a = idom[a];
    }
    return a;
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (pred[v].empty()) {
      idom[v] = root;
    } else {
      std::size_t d = pred[v].front();
      for (std::size_t i = 1; i < pred[v].size(); ++i) d = intersect(d, pred[v][i]);
      idom[v] = d;
    }
    depth[v] = depth[idom[v]] + 1;
  }
  std::vector<LayerId> out;
  for (std::size_t v = idom[profile.index_of(profile.output())]; v != root; v = idom[v])
    out.push_back(profile.nodes()[v]);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<RampSite> find_feasible_sites(const ModelProfile& profile) {
  std::vector<RampSite> sites;
  for (const auto& layer : cut_vertices(profile)) {
    auto it = profile.ramp_latency().find(layer);
    if (it == profile.ramp_latency().end())
      throw StructuralError("no ramp latency for feasible site '" + layer + "'");
    RampSite site;
    site.layer = layer;
    site.topo_index = profile.index_of(layer);
    site.ramp_latency = it->second;
    site.prefix_latency = profile.prefix_curve(site.topo_index);
    sites.push_back(std::move(site));
  }
  return sites;
}

std::vector<std::size_t> even_spacing(std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx;
  if (k == 0 || n == 0) return idx;
  if (k == 1) {
    idx.push_back(static_cast<std::size_t>(std::lround((n - 1) / 2.0)));
    return idx;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(k - 1);
    idx.push_back(static_cast<std::size_t>(std::lround(pos)));
  }
  return idx;
}

EEConfig initial_placement(std::span<const RampSite> sites, const RampBudget& budget,
                           const ModelProfile& profile) {
  if (sites.empty()) throw DomainError("initial placement needs at least one feasible site");
  for (std::size_t k = sites.size(); k >= 1; --k) {
    const auto idx = even_spacing(sites.size(), k);
    double cost = 0.0;
    for (std::size_t i : idx) cost += sites[i].ramp_ms(1);
    if (!budget.admits(cost, profile)) continue;
    EEConfig config;
    for (std::size_t i : idx) config.ramps.push_back({sites[i], 0.0});
    return config;
  }
  return {};
}

std::size_t find_site(std::span<const RampSite> sites, const LayerId& layer) {
  for (std::size_t i = 0; i < sites.size(); ++i)
    if (sites[i].layer == layer) return i;
  return sites.size();
}

}  // namespace eesim

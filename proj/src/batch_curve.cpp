#include "eesim/batch_curve.hpp"

#include <set>
#include <string>

#include "eesim/errors.hpp"

namespace eesim {

BatchCurve::BatchCurve(std::map<int, double> points) : points_(std::move(points)) {
  for (const auto& [batch, value] : points_) {
    if (batch < 1) throw ParameterError("batch sizes must be >= 1, got " + std::to_string(batch));
    (void)value;
  }
}

BatchCurve BatchCurve::constant(double value) { return BatchCurve({{1, value}}); }

double BatchCurve::at(int batch) const {
  if (points_.empty()) return 0.0;
  auto hi = points_.lower_bound(batch);
  if (hi == points_.end()) return std::prev(hi)->second;
  if (hi->first == batch || hi == points_.begin()) return hi->second;
  auto lo = std::prev(hi);
  const double span = static_cast<double>(hi->first - lo->first);
  const double w = static_cast<double>(batch - lo->first) / span;
  return lo->second + w * (hi->second - lo->second);
}

std::vector<int> BatchCurve::batches() const {
  std::vector<int> out;
  out.reserve(points_.size());
  for (const auto& kv : points_) out.push_back(kv.first);
  return out;
}

std::string BatchCurve::check_latency_invariants() const {
  if (!points_.count(1)) return "missing batch-size-1 entry";
  double prev = -1.0;
  for (const auto& [batch, value] : points_) {
    if (!(value >= 0.0)) return "negative latency at batch " + std::to_string(batch);
    if (value < prev) return "latency decreases at batch " + std::to_string(batch);
    prev = value;
  }
  return {};
}

BatchCurve operator+(const BatchCurve& a, const BatchCurve& b) {
  std::set<int> knots;
  for (const auto& kv : a.points_) knots.insert(kv.first);
  for (const auto& kv : b.points_) knots.insert(kv.first);
  std::map<int, double> sum;
  for (int k : knots) sum[k] = a.at(k) + b.at(k);
  return BatchCurve(std::move(sum));
}

}  // namespace eesim

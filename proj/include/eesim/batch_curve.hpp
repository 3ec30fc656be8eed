#pragma once

#include <map>
#include <string>
#include <vector>

namespace eesim {

// A value profiled at a handful of batch sizes (latency in ms, or a batching
// penalty multiplier). Unprofiled sizes are linearly interpolated between the
// nearest profiled neighbours and clamped outside the profiled range.
class BatchCurve {
 public:
  BatchCurve() = default;
  explicit BatchCurve(std::map<int, double> points);

  static BatchCurve constant(double value);

  double at(int batch) const;
  bool empty() const { return points_.empty(); }
  const std::map<int, double>& points() const { return points_; }
  std::vector<int> batches() const;

  // Every value >= 0, batch 1 present, non-decreasing in batch size.
  // Returns an empty string when valid, otherwise a description of the problem.
  std::string check_latency_invariants() const;

  friend BatchCurve operator+(const BatchCurve& a, const BatchCurve& b);

 private:
  std::map<int, double> points_;
};

}  // namespace eesim

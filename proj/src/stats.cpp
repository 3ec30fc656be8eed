#include "eesim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eesim/errors.hpp"

namespace eesim {
namespace {

double sorted_percentile(const std::vector<double>& sorted, double p) {
  if (!(p >= 0.0 && p <= 100.0)) throw DomainError("percentile must lie in [0,100]");
  const double h = static_cast<double>(sorted.size() - 1) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw DomainError("percentile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted_percentile(sorted, p);
}

std::vector<double> percentiles(std::span<const double> values, std::span<const double> ps) {
  if (values.empty()) throw DomainError("percentile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(ps.size());
  for (double p : ps) out.push_back(sorted_percentile(sorted, p));
  return out;
}

Percentiles summarize(std::span<const double> values) {
  Percentiles s;
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.p25 = sorted_percentile(sorted, 25);
  s.p50 = sorted_percentile(sorted, 50);
  s.p95 = sorted_percentile(sorted, 95);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.max = sorted.back();
  return s;
}

std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> cdf;
  cdf.reserve(sorted.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  return cdf;
}

double lag1_autocorrelation(std::span<const double> series) {
  if (series.size() < 2) throw DomainError("autocorrelation needs at least two samples");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double d = series[i] - mean;
    den += d * d;
    if (i + 1 < series.size()) num += d * (series[i + 1] - mean);
  }
  return den == 0.0 ? 0.0 : num / den;
}

}  // namespace eesim

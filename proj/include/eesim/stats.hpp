#pragma once

#include <span>
#include <utility>
#include <vector>

namespace eesim {

// Linear interpolation between closest ranks: rank h = (n-1)*p/100 on the
// sorted sample. Throws DomainError on an empty sample or p outside [0,100].
double percentile(std::span<const double> values, double p);
std::vector<double> percentiles(std::span<const double> values, std::span<const double> ps);

struct Percentiles {
  double p25 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

// All zeros for an empty sample.
Percentiles summarize(std::span<const double> values);

// Empirical CDF as (value, cumulative fraction) at each sorted sample.
std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> values);

double lag1_autocorrelation(std::span<const double> series);

}  // namespace eesim

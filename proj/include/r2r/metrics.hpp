#pragma once

#include <optional>
#include <vector>

#include "r2r/types.hpp"

namespace r2r {

/// sum_t (y_t - y*)^T (y_t - y*).
double total_cost(const SamplePath& path, const OutputVector& y_star);
/// total_cost / T.
double mse(const SamplePath& path, const OutputVector& y_star);
/// rho[c][t-1] = (y_t[c] - y*[c]) / y*[c]; throws DegenerateError on a zero target coordinate.
std::vector<std::vector<double>> error_ratio_series(const SamplePath& path,
                                                    const OutputVector& y_star);

/// Five-number summary plus moments and 1.5 x IQR whiskers.
struct DistributionSummary {
  int n = 0;
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  int n_outliers = 0;
};

/// Quantiles use linear interpolation between order statistics (type 7).
DistributionSummary summarize(std::vector<double> values);
double quantile_sorted(const std::vector<double>& sorted, double q);

struct SummaryStats {
  DistributionSummary mse;
  DistributionSummary cost;
  std::optional<double> ratio_vs_baseline;
};

}  // namespace r2r

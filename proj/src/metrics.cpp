#include "r2r/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "r2r/errors.hpp"

namespace r2r {

double total_cost(const SamplePath& path, const OutputVector& y_star) {
  if (path.periods.empty()) throw std::invalid_argument("total_cost: empty path");
  double cost = 0.0;
  for (const PeriodRecord& rec : path.periods) {
    if (rec.y.size() != y_star.size())
      throw DimensionError("total_cost: output and target dimensions differ");
    cost += (rec.y - y_star).squaredNorm();
  }
  return cost;
}

double mse(const SamplePath& path, const OutputVector& y_star) {
  return total_cost(path, y_star) / static_cast<double>(path.horizon());
}

std::vector<std::vector<double>> error_ratio_series(const SamplePath& path,
                                                    const OutputVector& y_star) {
  for (Eigen::Index c = 0; c < y_star.size(); ++c)
    if (y_star[c] == 0.0)
      throw DegenerateError("error ratio undefined: target coordinate " + std::to_string(c) +
                            " is zero");
  std::vector<std::vector<double>> rho(static_cast<std::size_t>(y_star.size()));
  for (const PeriodRecord& rec : path.periods) {
    if (rec.y.size() != y_star.size())
      throw DimensionError("error_ratio_series: output and target dimensions differ");
    for (Eigen::Index c = 0; c < y_star.size(); ++c)
      rho[static_cast<std::size_t>(c)].push_back((rec.y[c] - y_star[c]) / y_star[c]);
  }
  return rho;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

DistributionSummary summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: empty sample");
  std::sort(values.begin(), values.end());
  DistributionSummary s;
  s.n = static_cast<int>(values.size());
  // Sorting first makes the sums independent of replication order.
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std_dev = s.n > 1 ? std::sqrt(ss / (s.n - 1)) : 0.0;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.max;
  s.whisker_high = s.min;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      ++s.n_outliers;
    } else {
      s.whisker_low = std::min(s.whisker_low, v);
      s.whisker_high = std::max(s.whisker_high, v);
    }
  }
  return s;
}

}  // namespace r2r

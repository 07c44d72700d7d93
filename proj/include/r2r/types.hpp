#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace r2r {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Recipe settings applied in one run (platen speed, back pressure, ...).
using ControlVector = Eigen::VectorXd;
/// Post-run measurements (removal rate, non-uniformity, ...).
using OutputVector = Eigen::VectorXd;

struct PeriodRecord {
  int t = 0;
  ControlVector u;
  OutputVector y;
  std::optional<double> disturbance;
};

/// One complete T-period trajectory. periods[i] holds period t = i + 1.
struct SamplePath {
  OutputVector y0;
  std::vector<PeriodRecord> periods;
  std::uint64_t seed = 0;

  int horizon() const { return static_cast<int>(periods.size()); }
};

}  // namespace r2r

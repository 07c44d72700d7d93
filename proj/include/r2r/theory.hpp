#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "r2r/approximate_models.hpp"
#include "r2r/estimation.hpp"
#include "r2r/process_models.hpp"
#include "r2r/types.hpp"

namespace r2r {

enum class SignConvention { b_positive, b_negative };

/// Distribution of u = (y* - c_hat) / b_hat for jointly normal numerator
/// and denominator. With a negative mean gain every query is answered
/// through the distribution of -u, whose denominator has a positive mean.
class RatioDistribution {
 public:
  /// Sign convention picked from the sign of mu2.
  explicit RatioDistribution(const RatioMoments& moments);
  RatioDistribution(const RatioMoments& moments, SignConvention sign);

  const RatioMoments& moments() const { return moments_; }
  SignConvention sign_convention() const { return sign_; }

  double pdf(double u) const;
  /// Exact CDF from two bivariate-normal orthant probabilities.
  double cdf(double u) const;
  /// F*(u) = Phi((mu2 u - mu1) / (sigma1 sigma2 a(u))).
  double cdf_normal_approx(double u) const;
  /// Phi(-|mu2| / sigma2), the stated bound on |F - F*|.
  double approx_error_bound() const;

  /// Exact draw X1 / X2 from the underlying bivariate normal, given two
  /// independent standard normals.
  double sample(double z1, double z2) const;

 private:
  /// Moments of the positive-mean representation.
  RatioMoments positive_;
  RatioMoments moments_;
  SignConvention sign_;
};

double ratio_pdf(const RatioDistribution& dist, double u);
double ratio_cdf(const RatioDistribution& dist, double u);
double ratio_cdf_normal_approx(const RatioDistribution& dist, double u);

/// g(u) = u^2 sigma2^2 - 2 u sigma12 + sigma1^2, the variance of b_hat u - (y* - c_hat).
double g_variance_function(const RatioMoments& moments, double u);
/// sigma12 / sigma2^2.
double g_argmin(const RatioMoments& moments);
/// (sigma2^2 sigma1^2 - sigma12^2) / sigma2^2.
double g_min(const RatioMoments& moments);

/// u_bar = k (K^T K)^{-1} K^T U.
double weighted_sample_mean(const Vector& trajectory_features, const Matrix& K, const Vector& U);

/// Right-hand sides of the two probability bounds at tolerance eta.
struct Theorem2Bounds {
  double action = 0.0;
  double output = 0.0;
};
Theorem2Bounds theorem2_bounds(const RatioMoments& moments, double eta);

/// Scalar model y = b u + gamma^T k + e with e ~ N(0, sigma^2), where the
/// trajectory features are k = [1, z]. Offline data has fixed features
/// z_i ~ N(z_mean, z_std^2) and actions U_i = u_center + u_spread * N(0, 1);
/// u_center defaults to the optimal action u* at the online features.
struct Theorem2Config {
  std::string label;
  double b = 1.0;
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  double sigma = 1.0;
  double y_star = 0.0;
  int n_offline = 100;
  double z_mean = 0.0;
  double z_std = 1.0;
  double z_online = 0.0;
  double u_spread = 1.0;
  bool center_at_optimum = true;
  double u_center = 0.0;
};

struct BoundReport {
  std::string label;
  double eta = 0.0;
  double bound_action = 0.0;
  double bound_output = 0.0;
  double empirical_freq_action = 0.0;
  double empirical_freq_output = 0.0;
  int n_trials = 0;
  RatioMoments moments;
  double u_star = 0.0;
  double weighted_mean = 0.0;
  bool action_vacuous = false;
  bool output_vacuous = false;
  /// empirical <= min(bound, 1) + 3 binomial standard errors, per line.
  bool action_ok = false;
  bool output_ok = false;
};

/// Monte Carlo over n_trials noise redraws on a fixed offline design: refit
/// (b, gamma) by least squares, set u_hat = (y* - gamma_hat^T k) / b_hat,
/// and count |u_hat - u*| > eta and |b (u_hat - u*)| > eta. The analytic
/// bounds use the exact moments of (y* - c_hat, b_hat) for that design.
std::vector<BoundReport> theorem2_bound_check(const Theorem2Config& config,
                                              const std::vector<double>& etas, int n_trials,
                                              std::uint64_t seed);

/// The fixed battery of scalar configurations used for the bound check.
std::vector<Theorem2Config> theorem2_battery();

struct RateReport {
  std::vector<int> n_grid;
  /// variance[c][j]: empirical variance of coordinate c at n_grid[j].
  std::vector<std::vector<double>> variance;
  std::vector<std::vector<double>> bias;
  std::vector<std::vector<double>> bias_half_width;
  std::vector<double> slope;
  std::vector<double> slope_se;
  std::vector<std::string> coordinate_names;
  int replications = 0;
  double ci_level = 0.0;

  bool bias_covers_zero() const;
};

/// Log-log slope of var(theta_hat - theta) against the number of sample
/// paths N. Each replication simulates N paths with i.i.d. N(0, action_std^2)
/// actions and refits the approximate model on all of them. Bias intervals
/// are two-sided at level ci_level after a Bonferroni split over all
/// (coordinate, N) cells.
RateReport theorem1_rate_check(const ProcessModel& process, const ApproximateModel& model,
                               const Matrix& true_theta, const std::vector<int>& n_grid,
                               int replications, double action_std, std::uint64_t seed,
                               double ci_level = 0.99);

/// theta = [A^T; B^T; delta^T] laid out like LinearApproxModel's features.
Matrix linear_cmp_true_theta(const LinearCmpParams& params, bool include_time);

}  // namespace r2r

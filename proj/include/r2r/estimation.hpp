#pragma once

#include <span>
#include <string>
#include <vector>

#include "r2r/types.hpp"

namespace r2r {

/// Rows of X are feature vectors; rows of Y the matching outputs (one
/// column per response).
struct RegressionDesign {
  Matrix X;
  Matrix Y;
};

/// Least-squares fit shared by all responses of one design matrix.
struct LinearModelFit {
  Matrix theta_hat;          // p x m_y
  Vector residual_variance;  // per response, unbiased
  Matrix gram_inverse;       // (X^T X)^{-1}, or the ridge-regularised inverse
  int n_samples = 0;
  int rank = 0;
  bool ridge_used = false;

  int n_params() const { return static_cast<int>(theta_hat.rows()); }
  int n_outputs() const { return static_cast<int>(theta_hat.cols()); }
  /// sigma_j^2 (X^T X)^{-1} for response j.
  Matrix covariance(int response = 0) const {
    return residual_variance[response] * gram_inverse;
  }
};

struct FitOptions {
  bool ridge_fallback = true;
  /// Relative singular-value cutoff used to decide rank deficiency.
  double rank_tolerance = 1e-10;
};

/// Ordinary least squares via column-pivoted QR. When X is rank deficient
/// and ridge_fallback is set, solves (X^T X + lambda I) theta = X^T Y with
/// lambda = 1e-8 trace(X^T X) / p instead; otherwise throws
/// SingularityError carrying the number of deficient columns.
LinearModelFit fit_least_squares(const RegressionDesign& design, const FitOptions& options = {});

/// Least-squares state kept as a triangular factor that is updated row by
/// row with Givens rotations. solve() returns the same estimate as
/// fit_least_squares on all rows added so far (up to rounding), at O(p^2)
/// per row instead of re-factoring the full design.
class LeastSquaresAccumulator {
 public:
  LeastSquaresAccumulator() = default;
  LeastSquaresAccumulator(int n_features, int n_outputs);

  void add(const Vector& x, const Vector& y);
  LinearModelFit solve(const FitOptions& options = {}) const;

  int n_features() const { return static_cast<int>(r_.rows()); }
  int n_outputs() const { return static_cast<int>(qty_.cols()); }
  int n_samples() const { return n_; }
  /// Numerical rank of the rows added so far.
  int rank(double tolerance = 1e-10) const;

 private:
  Matrix r_;    // p x p upper triangular
  Matrix qty_;  // p x m
  Vector rss_;  // residual sum of squares per response beyond the factor
  int n_ = 0;
};

/// Variance of the simple-regression prediction at u_t from the actions
/// u_1..u_{t-1}: (1/(t-1) + (u_t - ubar)^2 / sum (u_i - ubar)^2) sigma^2.
double prediction_variance(double residual_variance, double u_t, std::span<const double> history);
double prediction_variance(const LinearModelFit& fit, double u_t, std::span<const double> history);

enum class VarianceForm { time_linear, constant };

std::string to_string(VarianceForm form);
VarianceForm variance_form_from_string(const std::string& name);

/// Output model assumed by the policy-gradient controller:
/// y_t | y_{t-1} ~ N(y_{t-1} + drift + beta (u_t - u_{t-1}), v(t)),
/// v(t) = gamma^2 t (time_linear) or gamma^2 (constant). drift is zero
/// unless fitted.
struct PgsDistributionParams {
  double beta = 0.0;
  double gamma = 1.0;
  double drift = 0.0;
  VarianceForm variance_form = VarianceForm::time_linear;

  double variance(int t) const;
  double mean(double y_prev, double u, double u_prev) const {
    return y_prev + drift + beta * (u - u_prev);
  }
  double log_density(double y, double y_prev, double u, double u_prev, int t) const;
  /// d/du log p(y; u) = beta (y - mean) / v(t).
  double score(double y, double y_prev, double u, double u_prev, int t) const;
};

/// beta by least squares of y_t - y_{t-1} on u_t - u_{t-1} pooled over all
/// paths and periods (u_0 = 0), without intercept unless fit_drift; gamma^2
/// by the closed-form MLE of the residuals under the chosen variance form.
PgsDistributionParams fit_pgs_params(std::span<const SamplePath> offline_paths,
                                     VarianceForm form = VarianceForm::time_linear,
                                     bool fit_drift = false);

/// Total log-likelihood of the paths' increments under params.
double pgs_log_likelihood(std::span<const SamplePath> paths, const PgsDistributionParams& params);

/// Joint normal statistics of (y* - c_hat, b_hat) for one period.
struct RatioMoments {
  double mu1 = 0.0;
  double mu2 = 1.0;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double sigma12 = 0.0;
  double rho = 0.0;
};

/// Builds moments from the 2x2 covariance of (y* - c_hat, b_hat). Validates
/// positivity and derives rho.
RatioMoments make_ratio_moments(double mu1, double mu2, double var1, double var2, double cov12);

/// Moments for a fit of y = b u + gamma^T K + e whose first coefficient is
/// the action gain b and whose remaining coefficients multiply the
/// trajectory features. Means are the plug-in estimates, covariances come
/// from the fit's sigma^2 (X^T X)^{-1}.
RatioMoments ratio_moments_from_fit(const LinearModelFit& fit, const Vector& trajectory_features,
                                    double y_star);

/// Same moments from an explicit parameter vector and covariance.
RatioMoments ratio_moments(const Vector& theta, const Matrix& covariance,
                           const Vector& trajectory_features, double y_star);

/// 2x2 covariance of (y* - c_hat, b_hat) from the partitioned-inverse block
/// expressions in terms of offline actions U, offline features K, online
/// features k and noise variance sigma^2. Throws SingularityError when
/// K^T K is singular or U lies in the column space of K.
Eigen::Matrix2d ratio_covariance_block(const Vector& U, const Matrix& K, const Vector& k,
                                       double sigma2);

}  // namespace r2r

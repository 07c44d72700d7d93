#include "r2r/estimation.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "r2r/errors.hpp"

namespace r2r {

namespace {

double ridge_lambda(const Matrix& gram) {
  return 1e-8 * gram.trace() / static_cast<double>(gram.rows());
}

int numerical_rank(const Matrix& m, double tolerance) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  if (smax == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tolerance * smax) ++rank;
  return rank;
}

[[noreturn]] void throw_rank_deficient(int rank, int p) {
  std::ostringstream msg;
  msg << "design is rank deficient: rank " << rank << " of " << p << " columns ("
      << (p - rank) << " deficient)";
  throw SingularityError(msg.str(), p - rank);
}

}  // namespace

LinearModelFit fit_least_squares(const RegressionDesign& design, const FitOptions& options) {
  const Matrix& X = design.X;
  const Matrix& Y = design.Y;
  const auto n = X.rows();
  const auto p = X.cols();
  if (n < 1 || p < 1) throw DimensionError("design must have n >= 1 rows and p >= 1 columns");
  if (Y.rows() != n) throw DimensionError("X and Y row counts differ");
  if (!X.allFinite() || !Y.allFinite()) throw DimensionError("design has non-finite entries");

  LinearModelFit fit;
  fit.n_samples = static_cast<int>(n);

  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(options.rank_tolerance);
  fit.rank = static_cast<int>(qr.rank());

  if (fit.rank == p) {
    fit.theta_hat = qr.solve(Y);
    const Matrix r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Matrix r_inv =
        r.triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
    const Matrix inv_perm = r_inv * r_inv.transpose();
    fit.gram_inverse = qr.colsPermutation() * inv_perm * qr.colsPermutation().transpose();
  } else {
    if (!options.ridge_fallback) throw_rank_deficient(fit.rank, static_cast<int>(p));
    const Matrix gram = X.transpose() * X;
    const double lambda = ridge_lambda(gram);
    if (!(lambda > 0.0)) throw_rank_deficient(fit.rank, static_cast<int>(p));
    const Matrix regularised = gram + lambda * Matrix::Identity(p, p);
    Eigen::LDLT<Matrix> ldlt(regularised);
    fit.theta_hat = ldlt.solve(X.transpose() * Y);
    fit.gram_inverse = ldlt.solve(Matrix::Identity(p, p));
    fit.ridge_used = true;
  }

  const Matrix residuals = Y - X * fit.theta_hat;
  const double dof = n > fit.rank ? static_cast<double>(n - fit.rank) : 0.0;
  fit.residual_variance = Vector::Zero(Y.cols());
  if (dof > 0.0) fit.residual_variance = residuals.colwise().squaredNorm().transpose() / dof;
  return fit;
}

// ---------------------------------------------------------------------------

LeastSquaresAccumulator::LeastSquaresAccumulator(int n_features, int n_outputs)
    : r_(Matrix::Zero(n_features, n_features)),
      qty_(Matrix::Zero(n_features, n_outputs)),
      rss_(Vector::Zero(n_outputs)) {
  if (n_features < 1 || n_outputs < 1)
    throw DimensionError("accumulator needs at least one feature and one output");
}

void LeastSquaresAccumulator::add(const Vector& x_in, const Vector& y_in) {
  const auto p = r_.rows();
  if (x_in.size() != p || y_in.size() != qty_.cols())
    throw DimensionError("row does not match accumulator dimensions");
  if (!x_in.allFinite() || !y_in.allFinite()) throw DimensionError("non-finite row");
  Vector x = x_in;
  Vector y = y_in;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (x[i] == 0.0) continue;
    const double rii = r_(i, i);
    const double h = std::hypot(rii, x[i]);
    const double c = rii / h;
    const double s = x[i] / h;
    for (Eigen::Index j = i; j < p; ++j) {
      const double a = r_(i, j);
      const double b = x[j];
      r_(i, j) = c * a + s * b;
      x[j] = -s * a + c * b;
    }
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      const double a = qty_(i, k);
      const double b = y[k];
      qty_(i, k) = c * a + s * b;
      y[k] = -s * a + c * b;
    }
  }
  rss_ += y.cwiseAbs2();
  ++n_;
}

int LeastSquaresAccumulator::rank(double tolerance) const { return numerical_rank(r_, tolerance); }

LinearModelFit LeastSquaresAccumulator::solve(const FitOptions& options) const {
  const auto p = r_.rows();
  if (n_ == 0) throw SingularityError("no samples in accumulator", static_cast<int>(p));
  LinearModelFit fit;
  fit.n_samples = n_;
  fit.rank = rank(options.rank_tolerance);
  const Matrix r = r_.triangularView<Eigen::Upper>();

  if (fit.rank == p) {
    fit.theta_hat = r.triangularView<Eigen::Upper>().solve(qty_);
    const Matrix r_inv = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
    fit.gram_inverse = r_inv * r_inv.transpose();
  } else {
    if (!options.ridge_fallback) throw_rank_deficient(fit.rank, static_cast<int>(p));
    const Matrix gram = r.transpose() * r;
    const double lambda = ridge_lambda(gram);
    if (!(lambda > 0.0)) throw_rank_deficient(fit.rank, static_cast<int>(p));
    Eigen::LDLT<Matrix> ldlt(gram + lambda * Matrix::Identity(p, p));
    fit.theta_hat = ldlt.solve(r.transpose() * qty_);
    fit.gram_inverse = ldlt.solve(Matrix::Identity(p, p));
    fit.ridge_used = true;
  }

  const Vector rss = rss_ + (qty_ - r * fit.theta_hat).colwise().squaredNorm().transpose();
  const double dof = n_ > fit.rank ? static_cast<double>(n_ - fit.rank) : 0.0;
  fit.residual_variance = dof > 0.0 ? Vector(rss / dof) : Vector::Zero(rss.size());
  return fit;
}

// ---------------------------------------------------------------------------

double prediction_variance(double residual_variance, double u_t, std::span<const double> history) {
  if (history.size() < 2) throw std::invalid_argument("prediction_variance needs t-1 >= 2 actions");
  double mean = 0.0;
  for (double u : history) mean += u;
  mean /= static_cast<double>(history.size());
  double spread = 0.0;
  for (double u : history) spread += (u - mean) * (u - mean);
  if (spread <= 0.0) throw DegenerateError("action history has zero spread");
  const double lever = (u_t - mean) * (u_t - mean) / spread;
  return (1.0 / static_cast<double>(history.size()) + lever) * residual_variance;
}

double prediction_variance(const LinearModelFit& fit, double u_t, std::span<const double> history) {
  return prediction_variance(fit.residual_variance[0], u_t, history);
}

// ---------------------------------------------------------------------------

std::string to_string(VarianceForm form) {
  return form == VarianceForm::time_linear ? "time_linear" : "constant";
}

VarianceForm variance_form_from_string(const std::string& name) {
  if (name == "time_linear") return VarianceForm::time_linear;
  if (name == "constant") return VarianceForm::constant;
  throw ConfigError("unknown variance_form '" + name + "'");
}

double PgsDistributionParams::variance(int t) const {
  const double g2 = gamma * gamma;
  return variance_form == VarianceForm::time_linear ? g2 * static_cast<double>(t) : g2;
}

double PgsDistributionParams::log_density(double y, double y_prev, double u, double u_prev,
                                          int t) const {
  const double v = variance(t);
  const double r = y - mean(y_prev, u, u_prev);
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - r * r / (2.0 * v);
}

double PgsDistributionParams::score(double y, double y_prev, double u, double u_prev,
                                    int t) const {
  return beta * (y - mean(y_prev, u, u_prev)) / variance(t);
}

namespace {

struct Increment {
  double du;
  double dy;
  int t;
};

std::vector<Increment> increments(std::span<const SamplePath> paths) {
  std::vector<Increment> out;
  for (const SamplePath& path : paths) {
    if (path.y0.size() < 1) throw DimensionError("offline path without y0");
    double y_prev = path.y0[0];
    double u_prev = 0.0;
    for (const PeriodRecord& rec : path.periods) {
      out.push_back({rec.u[0] - u_prev, rec.y[0] - y_prev, rec.t});
      y_prev = rec.y[0];
      u_prev = rec.u[0];
    }
  }
  return out;
}

}  // namespace

PgsDistributionParams fit_pgs_params(std::span<const SamplePath> offline_paths, VarianceForm form,
                                     bool fit_drift) {
  if (offline_paths.size() < 2) throw std::invalid_argument("fit_pgs_params needs >= 2 paths");
  for (const SamplePath& path : offline_paths)
    if (path.horizon() < 2) throw std::invalid_argument("fit_pgs_params needs paths of length >= 2");

  const std::vector<Increment> inc = increments(offline_paths);
  double mean_du = 0.0;
  double mean_dy = 0.0;
  if (fit_drift) {
    for (const Increment& i : inc) {
      mean_du += i.du;
      mean_dy += i.dy;
    }
    mean_du /= static_cast<double>(inc.size());
    mean_dy /= static_cast<double>(inc.size());
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (const Increment& i : inc) {
    sxy += (i.du - mean_du) * (i.dy - mean_dy);
    sxx += (i.du - mean_du) * (i.du - mean_du);
  }
  if (sxx <= 0.0) throw DegenerateError("all action increments are zero; beta is unidentifiable");

  PgsDistributionParams params;
  params.variance_form = form;
  params.beta = sxy / sxx;
  params.drift = mean_dy - params.beta * mean_du;
  double acc = 0.0;
  for (const Increment& i : inc) {
    const double r = i.dy - params.drift - params.beta * i.du;
    acc += form == VarianceForm::time_linear ? r * r / static_cast<double>(i.t) : r * r;
  }
  params.gamma = std::sqrt(acc / static_cast<double>(inc.size()));
  return params;
}

double pgs_log_likelihood(std::span<const SamplePath> paths, const PgsDistributionParams& params) {
  double ll = 0.0;
  for (const SamplePath& path : paths) {
    double y_prev = path.y0[0];
    double u_prev = 0.0;
    for (const PeriodRecord& rec : path.periods) {
      ll += params.log_density(rec.y[0], y_prev, rec.u[0], u_prev, rec.t);
      y_prev = rec.y[0];
      u_prev = rec.u[0];
    }
  }
  return ll;
}

// ---------------------------------------------------------------------------

RatioMoments make_ratio_moments(double mu1, double mu2, double var1, double var2, double cov12) {
  if (!(var1 > 0.0) || !(var2 > 0.0))
    throw DegenerateError("ratio moments need strictly positive variances");
  RatioMoments m;
  m.mu1 = mu1;
  m.mu2 = mu2;
  m.sigma1 = std::sqrt(var1);
  m.sigma2 = std::sqrt(var2);
  m.sigma12 = cov12;
  m.rho = cov12 / (m.sigma1 * m.sigma2);
  // Cauchy-Schwarz can be violated by a few ulps after the algebra above.
  if (std::abs(m.rho) > 1.0) {
    if (std::abs(m.rho) > 1.0 + 1e-9) throw DegenerateError("covariance exceeds sigma1 * sigma2");
    m.rho = std::copysign(1.0, m.rho);
    m.sigma12 = m.rho * m.sigma1 * m.sigma2;
  }
  return m;
}

RatioMoments ratio_moments(const Vector& theta, const Matrix& covariance,
                           const Vector& trajectory_features, double y_star) {
  const auto p = theta.size();
  if (p < 2) throw DimensionError("ratio moments need the action gain plus >= 1 feature coefficient");
  if (trajectory_features.size() != p - 1)
    throw DimensionError("trajectory features do not match the fitted coefficients");
  if (covariance.rows() != p || covariance.cols() != p)
    throw DimensionError("covariance does not match the parameter vector");
  const Vector gamma = theta.tail(p - 1);
  const Vector& k = trajectory_features;
  const double mu1 = y_star - gamma.dot(k);
  const double mu2 = theta[0];
  const double var1 = k.dot(covariance.bottomRightCorner(p - 1, p - 1) * k);
  const double var2 = covariance(0, 0);
  const double cov12 = -k.dot(covariance.bottomLeftCorner(p - 1, 1).col(0));
  return make_ratio_moments(mu1, mu2, var1, var2, cov12);
}

RatioMoments ratio_moments_from_fit(const LinearModelFit& fit, const Vector& trajectory_features,
                                    double y_star) {
  if (fit.ridge_used) throw SingularityError("fit is rank deficient (ridge fallback used)", 1);
  return ratio_moments(fit.theta_hat.col(0), fit.covariance(0), trajectory_features, y_star);
}

Eigen::Matrix2d ratio_covariance_block(const Vector& U, const Matrix& K, const Vector& k,
                                       double sigma2) {
  if (K.rows() != U.size() || K.cols() != k.size())
    throw DimensionError("U, K and k have inconsistent sizes");
  const Matrix ktk = K.transpose() * K;
  Eigen::FullPivLU<Matrix> lu(ktk);
  if (lu.rank() < ktk.rows())
    throw SingularityError("K^T K is singular", static_cast<int>(ktk.rows() - lu.rank()));
  const Vector w = lu.solve(K.transpose() * U);  // (K^T K)^{-1} K^T U
  const double s = U.squaredNorm() - U.dot(K * w);
  if (!(s > 1e-12 * U.squaredNorm())) throw SingularityError("U lies in the column space of K", 1);
  const double kw = k.dot(w);
  Eigen::Matrix2d cov;
  cov(0, 0) = sigma2 * (k.dot(lu.solve(k)) + kw * kw / s);
  cov(0, 1) = cov(1, 0) = sigma2 * kw / s;
  cov(1, 1) = sigma2 / s;
  return cov;
}

}  // namespace r2r

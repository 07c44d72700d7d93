#include "r2r/theory.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

#include "r2r/bivariate_normal.hpp"
#include "r2r/controllers.hpp"
#include "r2r/errors.hpp"
#include "r2r/rng.hpp"

namespace r2r {

namespace {

RatioMoments flip_denominator(const RatioMoments& m) {
  RatioMoments f = m;
  f.mu2 = -m.mu2;
  f.sigma12 = -m.sigma12;
  f.rho = -m.rho;
  return f;
}

double a_of(const RatioMoments& m, double w) {
  const double s1 = m.sigma1;
  const double s2 = m.sigma2;
  return std::sqrt(w * w / (s1 * s1) - 2.0 * m.rho * w / (s1 * s2) + 1.0 / (s2 * s2));
}

double hinkley_pdf(const RatioMoments& m, double w) {
  const double s1 = m.sigma1;
  const double s2 = m.sigma2;
  const double rho = m.rho;
  const double one_m_r2 = 1.0 - rho * rho;
  const double a = a_of(m, w);
  const double b = m.mu1 * w / (s1 * s1) - rho * (m.mu1 + m.mu2 * w) / (s1 * s2) + m.mu2 / (s2 * s2);
  const double c = m.mu1 * m.mu1 / (s1 * s1) - 2.0 * rho * m.mu1 * m.mu2 / (s1 * s2) +
                   m.mu2 * m.mu2 / (s2 * s2);
  const double d = std::exp((b * b - c * a * a) / (2.0 * one_m_r2 * a * a));
  const double q = b / (std::sqrt(one_m_r2) * a);
  const double first = b * d / (std::sqrt(2.0 * std::numbers::pi) * s1 * s2 * a * a * a) *
                       (normal_cdf(q) - normal_cdf(-q));
  const double second = std::sqrt(one_m_r2) / (std::numbers::pi * s1 * s2 * a * a) *
                        std::exp(-c / (2.0 * one_m_r2));
  return std::max(0.0, first + second);
}

double hinkley_cdf(const RatioMoments& m, double w) {
  const double s1 = m.sigma1;
  const double s2 = m.sigma2;
  const double a = a_of(m, w);
  const double h = (m.mu1 - m.mu2 * w) / (s1 * s2 * a);
  const double k = -m.mu2 / s2;
  double r = (s2 * w - m.rho * s1) / (s1 * s2 * a);
  r = std::clamp(r, -1.0, 1.0);
  return std::clamp(bivariate_normal_upper(h, k, r) + bivariate_normal_upper(-h, -k, r), 0.0, 1.0);
}

double hinkley_normal_approx(const RatioMoments& m, double w) {
  return normal_cdf((m.mu2 * w - m.mu1) / (m.sigma1 * m.sigma2 * a_of(m, w)));
}

void validate_moments(const RatioMoments& m) {
  if (!(m.sigma1 > 0.0) || !(m.sigma2 > 0.0))
    throw DegenerateError("ratio distribution needs sigma1, sigma2 > 0");
  if (!(std::abs(m.rho) < 1.0))
    throw DegenerateError("ratio distribution is degenerate for |rho| = 1");
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace

RatioDistribution::RatioDistribution(const RatioMoments& moments)
    : RatioDistribution(moments,
                        moments.mu2 < 0.0 ? SignConvention::b_negative : SignConvention::b_positive) {}

RatioDistribution::RatioDistribution(const RatioMoments& moments, SignConvention sign)
    : moments_(moments), sign_(sign) {
  validate_moments(moments_);
  positive_ = sign_ == SignConvention::b_negative ? flip_denominator(moments_) : moments_;
}

double RatioDistribution::pdf(double u) const {
  return sign_ == SignConvention::b_negative ? hinkley_pdf(positive_, -u) : hinkley_pdf(positive_, u);
}

double RatioDistribution::cdf(double u) const {
  return sign_ == SignConvention::b_negative ? 1.0 - hinkley_cdf(positive_, -u)
                                             : hinkley_cdf(positive_, u);
}

double RatioDistribution::cdf_normal_approx(double u) const {
  return sign_ == SignConvention::b_negative ? 1.0 - hinkley_normal_approx(positive_, -u)
                                             : hinkley_normal_approx(positive_, u);
}

double RatioDistribution::approx_error_bound() const {
  return normal_cdf(-std::abs(moments_.mu2) / moments_.sigma2);
}

double RatioDistribution::sample(double z1, double z2) const {
  const RatioMoments& m = moments_;
  const double x2 = m.mu2 + m.sigma2 * z2;
  const double x1 = m.mu1 + m.sigma1 * (m.rho * z2 + std::sqrt(1.0 - m.rho * m.rho) * z1);
  return x1 / x2;
}

double ratio_pdf(const RatioDistribution& dist, double u) { return dist.pdf(u); }
double ratio_cdf(const RatioDistribution& dist, double u) { return dist.cdf(u); }
double ratio_cdf_normal_approx(const RatioDistribution& dist, double u) {
  return dist.cdf_normal_approx(u);
}

// ---------------------------------------------------------------------------

double g_variance_function(const RatioMoments& m, double u) {
  return u * u * m.sigma2 * m.sigma2 - 2.0 * u * m.sigma12 + m.sigma1 * m.sigma1;
}

double g_argmin(const RatioMoments& m) { return m.sigma12 / (m.sigma2 * m.sigma2); }

double g_min(const RatioMoments& m) {
  const double s22 = m.sigma2 * m.sigma2;
  return (s22 * m.sigma1 * m.sigma1 - m.sigma12 * m.sigma12) / s22;
}

double weighted_sample_mean(const Vector& k, const Matrix& K, const Vector& U) {
  if (K.rows() != U.size() || K.cols() != k.size())
    throw DimensionError("weighted_sample_mean: inconsistent sizes");
  const Matrix ktk = K.transpose() * K;
  Eigen::FullPivLU<Matrix> lu(ktk);
  if (lu.rank() < ktk.rows())
    throw SingularityError("K^T K is singular", static_cast<int>(ktk.rows() - lu.rank()));
  return k.dot(lu.solve(K.transpose() * U));
}

Theorem2Bounds theorem2_bounds(const RatioMoments& m, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  const double tail = 2.0 * normal_cdf(-std::abs(m.mu2) / m.sigma2);
  const double gm = g_min(m);
  return {gm / (m.mu2 * m.mu2 * eta * eta) + tail, gm / (eta * eta) + tail};
}

// ---------------------------------------------------------------------------

std::vector<BoundReport> theorem2_bound_check(const Theorem2Config& cfg,
                                              const std::vector<double>& etas, int n_trials,
                                              std::uint64_t seed) {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (cfg.n_offline < 3) throw std::invalid_argument("n_offline must be >= 3");
  if (cfg.b == 0.0 || !(cfg.sigma > 0.0)) throw std::invalid_argument("need b != 0 and sigma > 0");

  const int n = cfg.n_offline;
  const Vector k = Eigen::Vector2d(1.0, cfg.z_online);
  const double u_star = (cfg.y_star - cfg.gamma0 - cfg.gamma1 * cfg.z_online) / cfg.b;
  const double center = cfg.center_at_optimum ? u_star : cfg.u_center;

  CounterRng design_rng(derive_seed(seed, tag_hash("design")));
  Matrix K(n, 2);
  Vector U(n);
  for (int i = 0; i < n; ++i) {
    K(i, 0) = 1.0;
    K(i, 1) = cfg.z_mean + cfg.z_std * design_rng.normal();
    U[i] = center + cfg.u_spread * design_rng.normal();
  }
  const Eigen::Matrix2d cov = ratio_covariance_block(U, K, k, cfg.sigma * cfg.sigma);
  const RatioMoments moments = make_ratio_moments(cfg.y_star - cfg.gamma0 - cfg.gamma1 * cfg.z_online,
                                                  cfg.b, cov(0, 0), cov(1, 1), cov(0, 1));

  Matrix X(n, 3);
  X.col(0) = U;
  X.rightCols(2) = K;
  const Vector mean_y = cfg.b * U + K * Eigen::Vector2d(cfg.gamma0, cfg.gamma1);
  // theta_hat = P y, identical to a least-squares refit on every trial.
  const Matrix P = (X.transpose() * X).ldlt().solve(X.transpose());

  std::vector<double> action_err(static_cast<std::size_t>(n_trials));
#pragma omp parallel for schedule(static)
  for (int trial = 0; trial < n_trials; ++trial) {
    CounterRng rng(derive_seed(seed, tag_hash("trial"), static_cast<std::uint64_t>(trial)));
    Vector y = mean_y;
    for (int i = 0; i < n; ++i) y[i] += cfg.sigma * rng.normal();
    const Vector theta = P * y;
    const double u_hat = (cfg.y_star - theta[1] * k[0] - theta[2] * k[1]) / theta[0];
    action_err[static_cast<std::size_t>(trial)] = std::abs(u_hat - u_star);
  }

  std::vector<BoundReport> reports;
  for (double eta : etas) {
    BoundReport rep;
    rep.label = cfg.label;
    rep.eta = eta;
    rep.n_trials = n_trials;
    rep.moments = moments;
    rep.u_star = u_star;
    rep.weighted_mean = weighted_sample_mean(k, K, U);
    const Theorem2Bounds bounds = theorem2_bounds(moments, eta);
    rep.bound_action = bounds.action;
    rep.bound_output = bounds.output;
    int action_hits = 0;
    int output_hits = 0;
    for (double err : action_err) {
      if (!(err <= eta)) ++action_hits;
      if (!(std::abs(cfg.b) * err <= eta)) ++output_hits;
    }
    rep.empirical_freq_action = static_cast<double>(action_hits) / n_trials;
    rep.empirical_freq_output = static_cast<double>(output_hits) / n_trials;
    rep.action_vacuous = rep.bound_action >= 1.0;
    rep.output_vacuous = rep.bound_output >= 1.0;
    auto within = [n_trials](double freq, double bound) {
      const double p = std::min(bound, 1.0);
      const double se = std::sqrt(p * (1.0 - p) / n_trials);
      return freq <= p + 3.0 * se;
    };
    rep.action_ok = rep.action_vacuous || within(rep.empirical_freq_action, rep.bound_action);
    rep.output_ok = rep.output_vacuous || within(rep.empirical_freq_output, rep.bound_output);
    reports.push_back(rep);
  }
  return reports;
}

std::vector<Theorem2Config> theorem2_battery() {
  std::vector<Theorem2Config> battery;
  auto add = [&battery](std::string label, double b, double g0, double g1, double sigma,
                        double y_star, int n, double z_online, double spread) {
    Theorem2Config c;
    c.label = std::move(label);
    c.b = b;
    c.gamma0 = g0;
    c.gamma1 = g1;
    c.sigma = sigma;
    c.y_star = y_star;
    c.n_offline = n;
    c.z_online = z_online;
    c.u_spread = spread;
    battery.push_back(c);
  };
  add("large-n-small-noise", 2.0, 1.0, 0.5, 0.1, 10.0, 500, 0.0, 1.0);
  add("drie-like-negative-gain", -1.8, 91.7, 0.0, 1.0, 90.0, 200, 0.0, 1.0);
  add("negative-gain-with-feature", -1.8, 91.7, 0.8, 1.0, 90.0, 100, 0.5, 2.0);
  add("unit-gain", 1.0, 0.0, 1.0, 0.5, 5.0, 100, 1.0, 1.0);
  add("small-sample", 1.5, 2.0, -0.5, 1.0, 8.0, 20, 0.0, 2.0);
  add("weak-gain", 0.3, 1.0, 0.2, 0.3, 2.5, 80, 0.0, 2.0);
  add("noisy", 3.0, -2.0, 1.0, 4.0, 10.0, 150, 0.0, 1.5);
  add("narrow-design", 2.0, 0.0, 0.0, 0.5, 4.0, 100, 0.0, 0.2);
  add("offset-features", 1.2, 5.0, 2.0, 0.8, 12.0, 120, 1.5, 1.0);
  add("wide-design", -0.7, 3.0, -1.0, 1.0, -2.0, 60, -0.5, 5.0);
  return battery;
}

// ---------------------------------------------------------------------------

bool RateReport::bias_covers_zero() const {
  for (std::size_t c = 0; c < bias.size(); ++c)
    for (std::size_t j = 0; j < bias[c].size(); ++j)
      if (std::abs(bias[c][j]) > bias_half_width[c][j]) return false;
  return true;
}

RateReport theorem1_rate_check(const ProcessModel& process, const ApproximateModel& model,
                               const Matrix& true_theta, const std::vector<int>& n_grid,
                               int replications, double action_std, std::uint64_t seed,
                               double ci_level) {
  if (n_grid.size() < 2) throw std::invalid_argument("n_grid needs at least two sizes");
  if (replications < 2) throw std::invalid_argument("replications must be >= 2");
  if (true_theta.rows() != model.n_features() || true_theta.cols() != process.output_dim())
    throw DimensionError("true theta does not match the model and process");

  const auto p = true_theta.rows();
  const auto m = true_theta.cols();
  const int n_coord = static_cast<int>(p * m);
  const std::size_t G = n_grid.size();

  RateReport report;
  report.n_grid = n_grid;
  report.replications = replications;
  report.ci_level = ci_level;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < p; ++i)
      report.coordinate_names.push_back("theta[" + std::to_string(i) + "," + std::to_string(j) + "]");
  report.variance.assign(n_coord, std::vector<double>(G));
  report.bias.assign(n_coord, std::vector<double>(G));
  report.bias_half_width.assign(n_coord, std::vector<double>(G));

  const double z = normal_quantile(1.0 - (1.0 - ci_level) / (2.0 * n_coord * static_cast<double>(G)));
  const ControlVector center = ControlVector::Zero(process.control_dim());

  for (std::size_t g = 0; g < G; ++g) {
    const int N = n_grid[g];
    std::vector<Vector> errors(static_cast<std::size_t>(replications));
#pragma omp parallel for schedule(dynamic)
    for (int rep = 0; rep < replications; ++rep) {
      const auto paths = collect_random_paths(
          process, N, center, action_std,
          derive_seed(seed, static_cast<std::uint64_t>(N), static_cast<std::uint64_t>(rep)));
      std::size_t rows = 0;
      for (const auto& path : paths) rows += path.periods.size();
      RegressionDesign design{Matrix(rows, p), Matrix(rows, m)};
      Eigen::Index r = 0;
      for (const auto& path : paths)
        for (const auto& rec : path.periods) {
          design.X.row(r) = model.features(rec.u, rec.t).transpose();
          design.Y.row(r) = rec.y.transpose();
          ++r;
        }
      const Matrix diff = fit_least_squares(design).theta_hat - true_theta;
      errors[static_cast<std::size_t>(rep)] = Eigen::Map<const Vector>(diff.data(), diff.size());
    }
    for (int c = 0; c < n_coord; ++c) {
      double mean = 0.0;
      for (const Vector& e : errors) mean += e[c];
      mean /= replications;
      double var = 0.0;
      for (const Vector& e : errors) var += (e[c] - mean) * (e[c] - mean);
      var /= (replications - 1);
      report.variance[c][g] = var;
      report.bias[c][g] = mean;
      report.bias_half_width[c][g] = z * std::sqrt(var / replications);
    }
  }

  for (int c = 0; c < n_coord; ++c) {
    Vector x(G);
    Vector y(G);
    for (std::size_t g = 0; g < G; ++g) {
      x[g] = std::log(static_cast<double>(n_grid[g]));
      y[g] = std::log(report.variance[c][g]);
    }
    const double xm = x.mean();
    const double ym = y.mean();
    const double sxx = (x.array() - xm).square().sum();
    const double slope = ((x.array() - xm) * (y.array() - ym)).sum() / sxx;
    const double intercept = ym - slope * xm;
    const double rss = (y.array() - intercept - slope * x.array()).square().sum();
    report.slope.push_back(slope);
    report.slope_se.push_back(G > 2 ? std::sqrt(rss / (G - 2) / sxx) : 0.0);
  }
  return report;
}

Matrix linear_cmp_true_theta(const LinearCmpParams& params, bool include_time) {
  const auto m_u = params.B.cols();
  Matrix theta(1 + m_u + (include_time ? 1 : 0), params.B.rows());
  theta.row(0) = params.A.transpose();
  theta.middleRows(1, m_u) = params.B.transpose();
  if (include_time) theta.row(1 + m_u) = params.delta.transpose();
  return theta;
}

}  // namespace r2r

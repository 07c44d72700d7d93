#include "r2r/approximate_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "r2r/errors.hpp"

namespace r2r {

std::string to_string(ApproxFamily family) {
  return family == ApproxFamily::linear ? "linear" : "quadratic";
}

ApproxFamily approx_family_from_string(const std::string& name) {
  if (name == "linear") return ApproxFamily::linear;
  if (name == "quadratic") return ApproxFamily::quadratic;
  throw ConfigError("unknown approximate model family '" + name + "'");
}

bool ActionBox::on_boundary(const ControlVector& u, double tol) const {
  const double scale = std::max({1.0, std::abs(lower), std::abs(upper)});
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u[i] <= lower + tol * scale || u[i] >= upper - tol * scale) return true;
  return false;
}

ApproximateModel::ApproximateModel(int control_dim, bool include_time)
    : control_dim_(control_dim), include_time_(include_time) {
  if (control_dim < 1) throw ConfigError("approximate model needs control_dim >= 1");
}

OutputVector ApproximateModel::predict(const Matrix& theta, const ControlVector& u, int t) const {
  if (theta.rows() != n_features())
    throw DimensionError("parameter matrix does not match the feature count");
  return theta.transpose() * features(u, t);
}

namespace {

void check_inputs(const ApproximateModel& model, const Matrix& theta, const OutputVector& y_star,
                  const ControlVector& warm_start, const ActionBox& box) {
  if (theta.rows() != model.n_features())
    throw DimensionError("parameter matrix does not match the feature count");
  if (theta.cols() != y_star.size()) throw DimensionError("target has the wrong output dimension");
  if (warm_start.size() != model.control_dim())
    throw DimensionError("warm start has the wrong control dimension");
  if (!(box.lower < box.upper)) throw ConfigError("action box needs lower < upper");
}

double objective(const ApproximateModel& model, const Matrix& theta, const ControlVector& u, int t,
                 const OutputVector& y_star) {
  return (model.predict(theta, u, t) - y_star).squaredNorm();
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear

LinearApproxModel::LinearApproxModel(int control_dim, bool include_time)
    : ApproximateModel(control_dim, include_time) {}

std::unique_ptr<ApproximateModel> LinearApproxModel::clone() const {
  return std::make_unique<LinearApproxModel>(*this);
}

int LinearApproxModel::n_features() const { return 1 + control_dim() + (include_time() ? 1 : 0); }

Vector LinearApproxModel::features(const ControlVector& u, int t) const {
  if (u.size() != control_dim()) throw DimensionError("action has the wrong control dimension");
  Vector psi(n_features());
  psi[0] = 1.0;
  psi.segment(1, control_dim()) = u;
  if (include_time()) psi[n_features() - 1] = static_cast<double>(t);
  return psi;
}

Matrix LinearApproxModel::jacobian(const Matrix& theta, const ControlVector&, int) const {
  return theta.middleRows(1, control_dim()).transpose();
}

ActionResult LinearApproxModel::optimize_action(const Matrix& theta, int t,
                                                const OutputVector& y_star,
                                                const ControlVector& warm_start,
                                                const ActionBox& box,
                                                const ActionSearchOptions&) const {
  check_inputs(*this, theta, y_star, warm_start, box);
  const Matrix gain = jacobian(theta, warm_start, t);  // m_y x m_u
  Vector offset = theta.row(0).transpose();
  if (include_time()) offset += static_cast<double>(t) * theta.row(n_features() - 1).transpose();

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gain);
  ActionResult result;
  const ControlVector raw = cod.solve(y_star - offset);
  result.u = box.clamp(raw);
  result.on_boundary = !raw.allFinite() || (raw - result.u).cwiseAbs().maxCoeff() > 0.0;
  if (!result.u.allFinite()) result.u = box.clamp(warm_start);
  result.objective = objective(*this, theta, result.u, t, y_star);
  result.evaluations = 1;
  return result;
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticApproxModel::QuadraticApproxModel(int control_dim, bool include_time)
    : ApproximateModel(control_dim, include_time) {}

std::unique_ptr<ApproximateModel> QuadraticApproxModel::clone() const {
  return std::make_unique<QuadraticApproxModel>(*this);
}

int QuadraticApproxModel::n_features() const {
  const int m = control_dim();
  return 1 + 2 * m + m * (m - 1) / 2 + (include_time() ? 1 : 0);
}

Vector QuadraticApproxModel::features(const ControlVector& u, int t) const {
  const int m = control_dim();
  if (u.size() != m) throw DimensionError("action has the wrong control dimension");
  Vector psi(n_features());
  int k = 0;
  psi[k++] = 1.0;
  for (int i = 0; i < m; ++i) psi[k++] = u[i];
  for (int i = 0; i < m; ++i) psi[k++] = u[i] * u[i];
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) psi[k++] = u[i] * u[j];
  if (include_time()) psi[k++] = static_cast<double>(t);
  return psi;
}

Matrix QuadraticApproxModel::jacobian(const Matrix& theta, const ControlVector& u, int) const {
  const int m = control_dim();
  // d psi / d u, n_features x m.
  Matrix dpsi = Matrix::Zero(n_features(), m);
  int k = 1;
  for (int i = 0; i < m; ++i) dpsi(k++, i) = 1.0;
  for (int i = 0; i < m; ++i) dpsi(k++, i) = 2.0 * u[i];
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      dpsi(k, i) = u[j];
      dpsi(k, j) = u[i];
      ++k;
    }
  return theta.transpose() * dpsi;
}

namespace {

struct LocalResult {
  ControlVector u;
  double objective;
  int evaluations;
};

LocalResult projected_lm(const ApproximateModel& model, const Matrix& theta, int t,
                         const OutputVector& y_star, ControlVector u, const ActionBox& box,
                         const ActionSearchOptions& options) {
  u = box.clamp(u);
  Vector r = model.predict(theta, u, t) - y_star;
  double f = r.squaredNorm();
  int evaluations = 1;
  double mu = 1e-3;
  for (int iter = 0; iter < options.max_iterations && f > 0.0; ++iter) {
    const Matrix J = model.jacobian(theta, u, t);
    const Matrix jtj = J.transpose() * J;
    const Vector grad = J.transpose() * r;
    if (grad.norm() <= options.tolerance * (1.0 + f)) break;
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Matrix damped = jtj;
      damped.diagonal().array() += mu * (1.0 + jtj.diagonal().array());
      const Vector step = damped.ldlt().solve(-grad);
      const ControlVector candidate = box.clamp(u + step);
      const Vector r_new = model.predict(theta, candidate, t) - y_star;
      ++evaluations;
      const double f_new = r_new.squaredNorm();
      if (f_new < f) {
        const double moved = (candidate - u).norm();
        u = candidate;
        r = r_new;
        const double decrease = f - f_new;
        f = f_new;
        mu = std::max(mu / 3.0, 1e-12);
        improved = true;
        if (moved <= options.tolerance * (1.0 + u.norm()) ||
            decrease <= options.tolerance * options.tolerance * (1.0 + f))
          iter = options.max_iterations;
        break;
      }
      mu *= 4.0;
    }
    if (!improved) break;
  }
  return {u, f, evaluations};
}

}  // namespace

ActionResult QuadraticApproxModel::optimize_action(const Matrix& theta, int t,
                                                   const OutputVector& y_star,
                                                   const ControlVector& warm_start,
                                                   const ActionBox& box,
                                                   const ActionSearchOptions& options) const {
  check_inputs(*this, theta, y_star, warm_start, box);
  const int m = control_dim();
  const double h = options.stencil_step;

  int grid_evaluations = 0;
  std::vector<ControlVector> starts;
  starts.push_back(warm_start);
  starts.push_back(ControlVector::Zero(m));
  for (int i = 0; i < m; ++i) {
    for (double sign : {1.0, -1.0}) {
      ControlVector s = warm_start;
      s[i] += sign * h;
      starts.push_back(s);
    }
  }
  for (int mask = 0; mask < (1 << m); ++mask) {
    ControlVector s = warm_start;
    for (int i = 0; i < m; ++i) s[i] += ((mask >> i) & 1 ? 0.5 : -0.5) * h;
    starts.push_back(s);
  }

  // Coarse grid over a finite box; its best points seed extra local runs.
  constexpr int kGridPerAxis = 7;
  constexpr int kGridStarts = 4;
  constexpr double kMaxGridWidth = 1e4;
  const double width = box.upper - box.lower;
  if (m <= 4 && std::isfinite(width) && width > 0.0 && width <= kMaxGridWidth) {
    std::vector<std::pair<double, ControlVector>> grid;
    int total = 1;
    for (int i = 0; i < m; ++i) total *= kGridPerAxis;
    grid.reserve(total);
    grid_evaluations = total;
    ControlVector u(m);
    for (int index = 0; index < total; ++index) {
      int rest = index;
      for (int i = 0; i < m; ++i) {
        const int k = rest % kGridPerAxis;
        rest /= kGridPerAxis;
        u[i] = box.lower + width * (k + 0.5) / kGridPerAxis;
      }
      grid.emplace_back(objective(*this, theta, u, t, y_star), u);
    }
    const int keep = std::min<int>(kGridStarts, static_cast<int>(grid.size()));
    std::partial_sort(grid.begin(), grid.begin() + keep, grid.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
    for (int i = 0; i < keep; ++i) starts.push_back(grid[i].second);
  }

  ActionResult best;
  best.objective = std::numeric_limits<double>::infinity();
  best.evaluations = grid_evaluations;
  for (const ControlVector& start : starts) {
    const LocalResult local = projected_lm(*this, theta, t, y_star, start, box, options);
    best.evaluations += local.evaluations;
    if (local.objective < best.objective) {
      best.u = local.u;
      best.objective = local.objective;
    }
  }
  best.on_boundary = box.on_boundary(best.u);
  return best;
}

std::unique_ptr<ApproximateModel> make_approximate_model(ApproxFamily family, int control_dim,
                                                         bool include_time) {
  if (family == ApproxFamily::linear)
    return std::make_unique<LinearApproxModel>(control_dim, include_time);
  return std::make_unique<QuadraticApproxModel>(control_dim, include_time);
}

ActionResult rl_alg1_action_optimize(const ApproximateModel& model, const LinearModelFit& fit,
                                     int t, const OutputVector& y_star,
                                     const ControlVector& warm_start, const ActionBox& box) {
  return model.optimize_action(fit.theta_hat, t, y_star, warm_start, box);
}

}  // namespace r2r

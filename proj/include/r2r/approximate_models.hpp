#pragma once

#include <memory>
#include <string>

#include "r2r/estimation.hpp"
#include "r2r/types.hpp"

namespace r2r {

enum class ApproxFamily { linear, quadratic };

std::string to_string(ApproxFamily family);
ApproxFamily approx_family_from_string(const std::string& name);

/// Box constraint on every action coordinate.
struct ActionBox {
  double lower = -1e6;
  double upper = 1e6;

  ControlVector clamp(const ControlVector& u) const { return u.cwiseMax(lower).cwiseMin(upper); }
  bool on_boundary(const ControlVector& u, double tol = 1e-12) const;
};

struct ActionResult {
  ControlVector u;
  double objective = 0.0;
  /// Solution touches the search box (clipped or constrained optimum).
  bool on_boundary = false;
  int evaluations = 0;
};

/// Options for the bounded multistart search used by non-linear families.
struct ActionSearchOptions {
  /// Half-width of the fixed stencil of extra starting points around the warm start.
  double stencil_step = 1.0;
  int max_iterations = 200;
  double tolerance = 1e-12;
};

/// Parametric approximation f_hat(u, t; theta) = theta^T psi(u, t) whose
/// feature map psi is fixed by the family. theta is p x m_y, one column per
/// output, so a least-squares fit on the features gives it directly.
class ApproximateModel {
 public:
  virtual ~ApproximateModel() = default;

  virtual ApproxFamily family() const = 0;
  virtual std::unique_ptr<ApproximateModel> clone() const = 0;

  int control_dim() const { return control_dim_; }
  bool include_time() const { return include_time_; }
  virtual int n_features() const = 0;

  virtual Vector features(const ControlVector& u, int t) const = 0;
  /// Jacobian of the prediction with respect to u (m_y x m_u).
  virtual Matrix jacobian(const Matrix& theta, const ControlVector& u, int t) const = 0;

  OutputVector predict(const Matrix& theta, const ControlVector& u, int t) const;

  /// argmin_u ||f_hat(u, t; theta) - y*||^2 over the box.
  virtual ActionResult optimize_action(const Matrix& theta, int t, const OutputVector& y_star,
                                       const ControlVector& warm_start, const ActionBox& box,
                                       const ActionSearchOptions& options = {}) const = 0;

 protected:
  ApproximateModel(int control_dim, bool include_time);

 private:
  int control_dim_;
  bool include_time_;
};

/// psi(u, t) = [1, u_1..u_m, t]; the period term is optional.
class LinearApproxModel final : public ApproximateModel {
 public:
  LinearApproxModel(int control_dim, bool include_time);

  ApproxFamily family() const override { return ApproxFamily::linear; }
  std::unique_ptr<ApproximateModel> clone() const override;
  int n_features() const override;
  Vector features(const ControlVector& u, int t) const override;
  Matrix jacobian(const Matrix& theta, const ControlVector& u, int t) const override;

  /// Minimum-norm solution of B_hat u = y* - c_hat(t), clipped to the box.
  ActionResult optimize_action(const Matrix& theta, int t, const OutputVector& y_star,
                               const ControlVector& warm_start, const ActionBox& box,
                               const ActionSearchOptions& options = {}) const override;
};

/// psi(u, t) = [1, u_i, u_i^2, u_i u_j (i < j), t], ordered as
/// intercept, linear terms, squares, cross terms in lexicographic (i, j)
/// order, then the optional period term.
class QuadraticApproxModel final : public ApproximateModel {
 public:
  QuadraticApproxModel(int control_dim, bool include_time);

  ApproxFamily family() const override { return ApproxFamily::quadratic; }
  std::unique_ptr<ApproximateModel> clone() const override;
  int n_features() const override;
  Vector features(const ControlVector& u, int t) const override;
  Matrix jacobian(const Matrix& theta, const ControlVector& u, int t) const override;

  /// Projected Levenberg-Marquardt from the warm start and a fixed stencil
  /// (origin, warm start +/- step along each axis, and the 2^m half-step
  /// corners). The lowest objective wins; ties go to the earliest start.
  ActionResult optimize_action(const Matrix& theta, int t, const OutputVector& y_star,
                               const ControlVector& warm_start, const ActionBox& box,
                               const ActionSearchOptions& options = {}) const override;
};

std::unique_ptr<ApproximateModel> make_approximate_model(ApproxFamily family, int control_dim,
                                                         bool include_time);

/// Convenience wrapper: dispatches to the model's optimizer.
ActionResult rl_alg1_action_optimize(const ApproximateModel& model, const LinearModelFit& fit,
                                     int t, const OutputVector& y_star,
                                     const ControlVector& warm_start, const ActionBox& box = {});

}  // namespace r2r

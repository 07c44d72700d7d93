#include "r2r/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "r2r/errors.hpp"

namespace r2r {

void Controller::begin_path(const ProcessModel&) { diagnostics_.periods.clear(); }

void Controller::observe(int, const ControlVector&, const OutputVector&) {}

void Controller::end_path(const SamplePath&) {}

SamplePath simulate_path(ProcessModel& process, Controller& controller, std::uint64_t seed) {
  process.reset(seed);
  controller.begin_path(process);
  SamplePath path;
  path.y0 = process.initial_output();
  path.seed = seed;
  path.periods.reserve(static_cast<std::size_t>(process.horizon()));
  for (int t = 1; t <= process.horizon(); ++t) {
    const ControlVector u = controller.act(process, t);
    if (u.size() != process.control_dim()) {
      throw DimensionError(controller.name() + " emitted an action of size " +
                           std::to_string(u.size()) + ", process expects " +
                           std::to_string(process.control_dim()));
    }
    if (process.draws_this_period() == 0) {
      process.draw(u);
    } else if (process.staged_action() != u) {
      throw std::logic_error(controller.name() +
                             " returned an action different from its last draw");
    }
    process.commit();
    PeriodRecord rec;
    rec.t = t;
    rec.u = u;
    rec.y = process.last_output();
    rec.disturbance = process.last_disturbance();
    controller.observe(t, rec.u, rec.y);
    path.periods.push_back(std::move(rec));
  }
  controller.end_path(path);
  return path;
}

// ---------------------------------------------------------------------------

NullController::NullController(ControlVector u) : u_(std::move(u)) {}

ControlVector NullController::act(ProcessModel&, int t) {
  diagnostics_.periods.push_back({.t = t});
  return u_;
}

OracleLinearController::OracleLinearController(LinearCmpParams params, OutputVector y_star)
    : params_(std::move(params)), y_star_(std::move(y_star)) {
  validate(params_);
  if (y_star_.size() != params_.B.rows()) throw DimensionError("target has the wrong dimension");
}

ControlVector OracleLinearController::act(ProcessModel&, int t) {
  diagnostics_.periods.push_back({.t = t});
  const Vector rhs = y_star_ - params_.A - params_.delta * static_cast<double>(t);
  return params_.B.completeOrthogonalDecomposition().solve(rhs);
}

RandomActionController::RandomActionController(ControlVector center, double std_dev)
    : center_(std::move(center)), std_dev_(std_dev) {
  if (!(std_dev_ >= 0.0)) throw ConfigError("exploration std must be >= 0");
}

void RandomActionController::begin_path(const ProcessModel& process) {
  Controller::begin_path(process);
  rng_ = CounterRng(derive_seed(process.seed(), tag_hash("random-actions")));
}

ControlVector RandomActionController::act(ProcessModel&, int t) {
  diagnostics_.periods.push_back({.t = t, .exploratory = true});
  ControlVector u = center_;
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += std_dev_ * rng_.normal();
  return u;
}

// ---------------------------------------------------------------------------

EwmaController::EwmaController(Matrix B, OutputVector y_star, double lambda, OutputVector a_init)
    : B_(std::move(B)), y_star_(std::move(y_star)), lambda_(lambda), a_init_(std::move(a_init)) {
  if (!(lambda_ >= 0.0 && lambda_ <= 1.0)) throw ConfigError("ewma: lambda must lie in [0, 1]");
  if (y_star_.size() != B_.rows()) throw DimensionError("ewma: target does not match rows of B");
  if (a_init_.size() == 0) a_init_ = Vector::Zero(B_.rows());
  if (a_init_.size() != B_.rows()) throw DimensionError("ewma: a_init does not match rows of B");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(B_);
  if (cod.rank() < B_.rows())
    throw ConfigError("ewma: gain matrix B has no right inverse (rank " +
                      std::to_string(cod.rank()) + " < " + std::to_string(B_.rows()) + ")");
  B_pinv_ = cod.pseudoInverse();
  a_hat_ = a_init_;
}

void EwmaController::begin_path(const ProcessModel& process) {
  Controller::begin_path(process);
  a_hat_ = a_init_;
}

ControlVector EwmaController::act(ProcessModel&, int t) {
  diagnostics_.periods.push_back({.t = t});
  return B_pinv_ * (y_star_ - a_hat_);
}

void EwmaController::observe(int, const ControlVector& u, const OutputVector& y) {
  a_hat_ = lambda_ * (y - B_ * u) + (1.0 - lambda_) * a_hat_;
}

GhrController::GhrController(double b, double y_star, double c, double s, double a_init)
    : b_(b), y_star_(y_star), c_(c), s_(s), a_init_(a_init), a_hat_(a_init) {
  if (b_ == 0.0 || !std::isfinite(b_)) throw ConfigError("ghr: gain b must be finite and nonzero");
  if (!(c_ >= 0.0)) throw ConfigError("ghr: c must be >= 0");
  if (!(s_ > -1.0)) throw ConfigError("ghr: s must be > -1");
}

double GhrController::weight(int t) const {
  if (std::isinf(s_)) return 0.0;
  return std::min(1.0, c_ / (static_cast<double>(t) + s_));
}

void GhrController::begin_path(const ProcessModel& process) {
  Controller::begin_path(process);
  a_hat_ = a_init_;
}

ControlVector GhrController::act(ProcessModel&, int t) {
  diagnostics_.periods.push_back({.t = t});
  return Vector::Constant(1, (y_star_ - a_hat_) / b_);
}

void GhrController::observe(int t, const ControlVector& u, const OutputVector& y) {
  const double lambda = weight(t);
  a_hat_ = lambda * (y[0] - b_ * u[0]) + (1.0 - lambda) * a_hat_;
}

}  // namespace r2r

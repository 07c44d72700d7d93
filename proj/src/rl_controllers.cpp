#include <cmath>
#include <optional>
#include <stdexcept>

#include "r2r/controllers.hpp"
#include "r2r/errors.hpp"

namespace r2r {

void PeriodDataset::append(const OutputVector& y_prev_in, const ControlVector& u_in,
                           const OutputVector& y_in) {
  if (!u.empty() && (u_in.size() != u.front().size() || y_in.size() != y.front().size()))
    throw DimensionError("dataset triples must share dimensions");
  y_prev.push_back(y_prev_in);
  u.push_back(u_in);
  y.push_back(y_in);
}

// ---------------------------------------------------------------------------
// Algorithm 1

RlAlg1Controller::RlAlg1Controller(Alg1Config config, OutputVector y_star, int control_dim,
                                   int output_dim)
    : config_(std::move(config)),
      y_star_(std::move(y_star)),
      model_(make_approximate_model(config_.family, control_dim, config_.include_time)) {
  if (!(config_.epsilon > 0.0) || !(config_.eta > 0.0))
    throw ConfigError("rl_alg1: epsilon and eta must be > 0");
  if (config_.max_inner_iters < 1) throw ConfigError("rl_alg1: max_inner_iters must be >= 1");
  if (!(config_.explore_std >= 0.0)) throw ConfigError("rl_alg1: explore_std must be >= 0");
  if (y_star_.size() != output_dim) throw DimensionError("rl_alg1: target has the wrong dimension");
  if (config_.u_init.size() == 0) config_.u_init = ControlVector::Zero(control_dim);
  if (config_.u_init.size() != control_dim)
    throw DimensionError("rl_alg1: u_init has the wrong dimension");
  warm_ = config_.u_init;
}

LeastSquaresAccumulator& RlAlg1Controller::accumulator(int t) {
  const int key = config_.pooled ? 0 : t;
  auto it = accumulators_.find(key);
  if (it == accumulators_.end())
    it = accumulators_
             .emplace(key, LeastSquaresAccumulator(model_->n_features(),
                                                   static_cast<int>(y_star_.size())))
             .first;
  return it->second;
}

PeriodDataset& RlAlg1Controller::period_data(int t) {
  auto& d = datasets_[config_.pooled ? 0 : t];
  d.period = config_.pooled ? 0 : t;
  return d;
}

const PeriodDataset& RlAlg1Controller::dataset(int t) const {
  static const PeriodDataset empty;
  const auto it = datasets_.find(config_.pooled ? 0 : t);
  return it == datasets_.end() ? empty : it->second;
}

std::optional<LinearModelFit> RlAlg1Controller::current_fit(int t) const {
  const auto it = accumulators_.find(config_.pooled ? 0 : t);
  if (it == accumulators_.end() || it->second.rank() < model_->n_features()) return std::nullopt;
  return it->second.solve();
}

void RlAlg1Controller::begin_path(const ProcessModel& process) {
  Controller::begin_path(process);
  diagnostics_.warnings.clear();
  rng_ = CounterRng(derive_seed(process.seed(), tag_hash("alg1-explore")));
  y_prev_ = process.initial_output();
  if (process.control_dim() != model_->control_dim() ||
      process.output_dim() != y_star_.size())
    throw DimensionError("rl_alg1: controller and process dimensions disagree");
}

ControlVector RlAlg1Controller::act(ProcessModel& process, int t) {
  if (t == 1) {
    const auto it = last_final_action_.find(1);
    warm_ = it != last_final_action_.end() ? it->second : config_.u_init;
  }
  LeastSquaresAccumulator& acc = accumulator(t);
  PeriodDataset& data = period_data(t);
  const int p = model_->n_features();

  PeriodDiagnostics diag{.t = t, .inner_iterations = 0, .converged = false};
  std::optional<Matrix> theta_prev;
  std::optional<ControlVector> u_prev;
  ControlVector u = warm_;
  for (int k = 1; k <= config_.max_inner_iters; ++k) {
    std::optional<Matrix> theta;
    if (acc.rank() < p) {
      u = warm_;
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += config_.explore_std * rng_.normal();
      u = config_.box.clamp(u);
      diag.exploratory = true;
    } else {
      theta = acc.solve().theta_hat;
      const ActionResult res =
          model_->optimize_action(*theta, t, y_star_, u, config_.box, config_.search);
      u = res.u;
      diag.boundary_action = res.on_boundary;
      diagnostics_.theta = *theta;
    }
    const OutputVector y = process.draw(u);
    data.append(y_prev_, u, y);
    acc.add(model_->features(u, t), y);
    ++total_observations_;
    diag.inner_iterations = k;

    if (theta && theta_prev && u_prev && (*theta - *theta_prev).norm() < config_.epsilon &&
        (u - *u_prev).norm() < config_.eta) {
      diag.converged = true;
      break;
    }
    if (theta) theta_prev = theta;
    u_prev = u;
  }
  if (!diag.converged)
    diagnostics_.warnings.push_back("period " + std::to_string(t) + ": no convergence after " +
                                    std::to_string(config_.max_inner_iters) +
                                    " inner iterations; last iterate used");
  diagnostics_.periods.push_back(diag);
  return u;
}

void RlAlg1Controller::observe(int t, const ControlVector& u, const OutputVector& y) {
  y_prev_ = y;
  warm_ = u;
  last_final_action_[t] = u;
}

// ---------------------------------------------------------------------------
// OAPE

OapeController::OapeController(Alg1Config config, OutputVector y_star, int control_dim,
                               int output_dim)
    : config_(std::move(config)),
      y_star_(std::move(y_star)),
      output_dim_(output_dim),
      model_(make_approximate_model(config_.family, control_dim, config_.include_time)) {
  if (y_star_.size() != output_dim) throw DimensionError("oape: target has the wrong dimension");
  if (config_.u_init.size() == 0) config_.u_init = ControlVector::Zero(control_dim);
  warm_ = config_.u_init;
}

std::vector<SamplePath> collect_random_paths(const ProcessModel& process, int n_paths,
                                             const ControlVector& center, double std_dev,
                                             std::uint64_t seed) {
  if (n_paths < 1) throw ConfigError("need at least one exploration path");
  auto sim = process.clone();
  RandomActionController explorer(center, std_dev);
  std::vector<SamplePath> paths;
  paths.reserve(static_cast<std::size_t>(n_paths));
  for (int i = 0; i < n_paths; ++i)
    paths.push_back(simulate_path(*sim, explorer, derive_seed(seed, static_cast<std::uint64_t>(i))));
  return paths;
}

void OapeController::train(const ProcessModel& process, int n_paths, const ControlVector& center,
                           double std_dev, std::uint64_t seed) {
  train(collect_random_paths(process, n_paths, center, std_dev, seed));
}

void OapeController::train(const std::vector<SamplePath>& paths) {
  std::size_t n = 0;
  for (const SamplePath& path : paths) n += path.periods.size();
  RegressionDesign design{Matrix(n, model_->n_features()), Matrix(n, output_dim_)};
  Eigen::Index row = 0;
  for (const SamplePath& path : paths) {
    for (const PeriodRecord& rec : path.periods) {
      design.X.row(row) = model_->features(rec.u, rec.t).transpose();
      design.Y.row(row) = rec.y.transpose();
      ++row;
    }
  }
  fit_ = fit_least_squares(design);
  diagnostics_.theta = fit_->theta_hat;
}

const LinearModelFit& OapeController::fit() const {
  if (!fit_) throw std::logic_error("oape: train() has not been called");
  return *fit_;
}

ControlVector OapeController::act(ProcessModel&, int t) {
  const ActionResult res =
      model_->optimize_action(fit().theta_hat, t, y_star_, warm_, config_.box, config_.search);
  warm_ = res.u;
  diagnostics_.periods.push_back({.t = t, .boundary_action = res.on_boundary});
  return res.u;
}

// ---------------------------------------------------------------------------
// Algorithm 2

RlPgsController::RlPgsController(PgsConfig config, double y_star, PgsDistributionParams params)
    : config_(config), y_star_(y_star), params_(params) {
  if (!(config_.alpha > 0.0)) throw ConfigError("rl_pgs: alpha must be > 0");
  if (!(config_.eta > 0.0)) throw ConfigError("rl_pgs: eta must be > 0");
  if (config_.max_inner_iters < 1) throw ConfigError("rl_pgs: max_inner_iters must be >= 1");
  if (!(config_.u_guard > 0.0)) throw ConfigError("rl_pgs: u_guard must be > 0");
  if (config_.max_halvings < 0) throw ConfigError("rl_pgs: max_halvings must be >= 0");
  if (!(params_.gamma > 0.0)) throw ConfigError("rl_pgs: gamma must be > 0");
}

void RlPgsController::set_offline_store(std::vector<SamplePath> paths) { store_ = std::move(paths); }

void RlPgsController::begin_path(const ProcessModel& process) {
  Controller::begin_path(process);
  diagnostics_.warnings.clear();
  if (process.control_dim() != 1 || process.output_dim() != 1)
    throw DimensionError("rl_pgs: requires a scalar process");
  y_prev_ = process.initial_output()[0];
  u_prev_ = 0.0;
}

double RlPgsController::gradient(double y, double u, int t) const {
  const double cost = (y - y_star_) * (y - y_star_);
  return cost * params_.score(y, y_prev_, u, u_prev_, t);
}

ControlVector RlPgsController::act(ProcessModel& process, int t) {
  double u = t == 1 ? config_.u_init : u_prev_;
  double alpha = config_.alpha;
  PeriodDiagnostics diag{.t = t, .inner_iterations = 0, .converged = false};
  for (int k = 1; k <= config_.max_inner_iters; ++k) {
    double y = process.draw(Vector::Constant(1, u))[0];
    double u_next = u - alpha * gradient(y, u, t);
    // A rejected step is retried from the same iterate with half the step
    // size and a fresh observation.
    while (!std::isfinite(u_next) || std::abs(u_next) > config_.u_guard) {
      if (diag.step_halvings == config_.max_halvings)
        throw ConvergenceError("rl_pgs: period " + std::to_string(t) + " still divergent after " +
                               std::to_string(config_.max_halvings) + " step-size halvings");
      ++diag.step_halvings;
      alpha *= 0.5;
      y = process.draw(Vector::Constant(1, u))[0];
      u_next = u - alpha * gradient(y, u, t);
    }
    diag.inner_iterations = k;
    const bool small_step = std::abs(u_next - u) < config_.eta;
    u = u_next;
    if (small_step) {
      diag.converged = true;
      break;
    }
  }
  if (!diag.converged)
    diagnostics_.warnings.push_back("period " + std::to_string(t) + ": no convergence after " +
                                    std::to_string(config_.max_inner_iters) + " inner iterations");
  // The recorded outcome is an observation at the final action.
  if (process.staged_action().size() != 1 || process.staged_action()[0] != u)
    process.draw(Vector::Constant(1, u));
  diagnostics_.periods.push_back(diag);
  return Vector::Constant(1, u);
}

void RlPgsController::observe(int, const ControlVector& u, const OutputVector& y) {
  u_prev_ = u[0];
  y_prev_ = y[0];
}

void RlPgsController::end_path(const SamplePath& path) {
  store_.push_back(path);
  if (config_.refit_each_path && store_.size() >= 2)
    params_ = fit_pgs_params(store_, params_.variance_form, config_.fit_drift);
}

// ---------------------------------------------------------------------------
// One-call drivers

SamplePath rl_alg1_run(const ProcessModel& process, const Alg1Config& config,
                       const OutputVector& y_star, int n_paths, std::uint64_t seed) {
  if (n_paths < 1) throw ConfigError("rl_alg1_run: n_paths must be >= 1");
  auto sim = process.clone();
  RlAlg1Controller controller(config, y_star, sim->control_dim(), sim->output_dim());
  SamplePath last;
  for (int i = 0; i < n_paths; ++i)
    last = simulate_path(*sim, controller, derive_seed(seed, static_cast<std::uint64_t>(i)));
  return last;
}

SamplePath oape_run(const ProcessModel& process, const Alg1Config& config,
                    const OutputVector& y_star, int n_paths, const ControlVector& explore_center,
                    double explore_std, std::uint64_t seed) {
  auto sim = process.clone();
  OapeController controller(config, y_star, sim->control_dim(), sim->output_dim());
  controller.train(*sim, n_paths, explore_center, explore_std, derive_seed(seed, tag_hash("explore")));
  return simulate_path(*sim, controller, derive_seed(seed, tag_hash("evaluate")));
}

SamplePath rl_pgs_run(const ProcessModel& process, const PgsConfig& config, double y_star,
                      const PgsDistributionParams& params, std::uint64_t seed) {
  auto sim = process.clone();
  RlPgsController controller(config, y_star, params);
  return simulate_path(*sim, controller, seed);
}

}  // namespace r2r

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "r2r/approximate_models.hpp"
#include "r2r/estimation.hpp"
#include "r2r/process_models.hpp"
#include "r2r/rng.hpp"
#include "r2r/types.hpp"

namespace r2r {

/// Per-period bookkeeping reported by a controller.
struct PeriodDiagnostics {
  int t = 0;
  int inner_iterations = 1;
  bool converged = true;
  bool exploratory = false;
  bool boundary_action = false;
  int step_halvings = 0;
};

/// What one controller did over one sample path.
struct PathDiagnostics {
  std::vector<PeriodDiagnostics> periods;
  /// Most recent fitted parameters (p x m_y), empty for non-learning controllers.
  Matrix theta;
  std::vector<std::string> warnings;
};

/// Stateful run-to-run policy. For each period the controller sees the
/// process (it may draw from it several times to consume real observations
/// in an inner loop, but never commits) and returns the action for the
/// period. When it draws, the returned action must be the one of its last
/// draw; simulate_path commits that draw. Learned state persists across
/// sample paths until the controller is destroyed.
class Controller {
 public:
  virtual ~Controller() = default;

  virtual std::string name() const = 0;

  /// Called once before period 1 of every path; the process is already reset.
  virtual void begin_path(const ProcessModel& process);
  virtual ControlVector act(ProcessModel& process, int t) = 0;
  /// Outcome committed for period t.
  virtual void observe(int t, const ControlVector& u, const OutputVector& y);
  virtual void end_path(const SamplePath& path);

  const PathDiagnostics& diagnostics() const { return diagnostics_; }

 protected:
  PathDiagnostics diagnostics_;
};

/// Runs one complete path: reset(seed), then for t = 1..T ask the controller
/// for u_t, draw once if it did not, commit, and record (u_t, y_t, d_t).
SamplePath simulate_path(ProcessModel& process, Controller& controller, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Classical controllers

/// Holds a fixed action (zero by default).
class NullController final : public Controller {
 public:
  explicit NullController(ControlVector u);
  std::string name() const override { return "null"; }
  ControlVector act(ProcessModel& process, int t) override;

 private:
  ControlVector u_;
};

/// Knows the linear CMP parameters exactly and solves B u = y* - A - delta t
/// in the minimum-norm sense (noise cannot be compensated).
class OracleLinearController final : public Controller {
 public:
  OracleLinearController(LinearCmpParams params, OutputVector y_star);
  std::string name() const override { return "oracle"; }
  ControlVector act(ProcessModel& process, int t) override;

 private:
  LinearCmpParams params_;
  OutputVector y_star_;
};

/// Draws u_t ~ N(center, std^2 I) independently every period.
class RandomActionController final : public Controller {
 public:
  RandomActionController(ControlVector center, double std_dev);
  std::string name() const override { return "random"; }
  void begin_path(const ProcessModel& process) override;
  ControlVector act(ProcessModel& process, int t) override;

 private:
  ControlVector center_;
  double std_dev_;
  CounterRng rng_{0};
};

/// Single-EWMA intercept filter with known gain B:
///   a_t = lambda (y_t - B u_t) + (1 - lambda) a_{t-1},  u_{t+1} = B^+ (y* - a_t).
class EwmaController final : public Controller {
 public:
  EwmaController(Matrix B, OutputVector y_star, double lambda, OutputVector a_init);
  std::string name() const override { return "ewma"; }
  void begin_path(const ProcessModel& process) override;
  ControlVector act(ProcessModel& process, int t) override;
  void observe(int t, const ControlVector& u, const OutputVector& y) override;

  const OutputVector& intercept_estimate() const { return a_hat_; }

 private:
  Matrix B_;
  Matrix B_pinv_;
  OutputVector y_star_;
  double lambda_;
  OutputVector a_init_;
  OutputVector a_hat_;
};

/// Scalar EWMA whose discount weight follows the harmonic sequence
/// lambda_t = min(1, c / (t + s)); action u_t = (y* - a_{t-1}) / b.
class GhrController final : public Controller {
 public:
  GhrController(double b, double y_star, double c, double s, double a_init);
  std::string name() const override { return "ghr"; }
  void begin_path(const ProcessModel& process) override;
  ControlVector act(ProcessModel& process, int t) override;
  void observe(int t, const ControlVector& u, const OutputVector& y) override;

  double weight(int t) const;

 private:
  double b_;
  double y_star_;
  double c_;
  double s_;
  double a_init_;
  double a_hat_ = 0.0;
};

// ---------------------------------------------------------------------------
// Learning controllers

/// (y_{t-1}, u_t, y_t) triples collected for one period.
struct PeriodDataset {
  int period = 0;
  std::vector<OutputVector> y_prev;
  std::vector<ControlVector> u;
  std::vector<OutputVector> y;

  std::size_t size() const { return u.size(); }
  void append(const OutputVector& y_prev_in, const ControlVector& u_in, const OutputVector& y_in);
};

struct Alg1Config {
  ApproxFamily family = ApproxFamily::linear;
  bool include_time = true;
  /// Pool every period into one dataset (time-independent parameter vector).
  /// Otherwise each period keeps its own dataset D_t.
  bool pooled = true;
  double epsilon = 0.5;
  double eta = 0.5;
  int max_inner_iters = 20;
  /// Starting action for period 1 of the first path; zeros when empty.
  ControlVector u_init;
  /// Std of the random actions taken while the design is still rank deficient.
  double explore_std = 1.0;
  ActionBox box;
  ActionSearchOptions search;
};

/// Model-based learning-by-doing controller. Each period alternates
/// (i) refit theta on the dataset, (ii) minimise the model's squared error
/// to y* over u, (iii) execute u on the process and append the observation,
/// until both ||theta^{k} - theta^{k-1}|| < epsilon and ||u^{k} - u^{k-1}|| < eta
/// or max_inner_iters runs. While the dataset cannot identify theta, the
/// executed action is the warm start plus Gaussian exploration instead.
class RlAlg1Controller final : public Controller {
 public:
  RlAlg1Controller(Alg1Config config, OutputVector y_star, int control_dim, int output_dim);

  std::string name() const override { return "rl_alg1"; }
  void begin_path(const ProcessModel& process) override;
  ControlVector act(ProcessModel& process, int t) override;
  void observe(int t, const ControlVector& u, const OutputVector& y) override;

  const ApproximateModel& model() const { return *model_; }
  /// Current fit for period t (the pooled fit when pooled).
  std::optional<LinearModelFit> current_fit(int t) const;
  const PeriodDataset& dataset(int t) const;
  int total_observations() const { return total_observations_; }

 private:
  LeastSquaresAccumulator& accumulator(int t);
  PeriodDataset& period_data(int t);

  Alg1Config config_;
  OutputVector y_star_;
  std::unique_ptr<ApproximateModel> model_;
  std::map<int, LeastSquaresAccumulator> accumulators_;
  std::map<int, PeriodDataset> datasets_;
  std::map<int, ControlVector> last_final_action_;
  ControlVector warm_;
  OutputVector y_prev_;
  CounterRng rng_{0};
  int total_observations_ = 0;
};

/// Optimise-after-parameter-estimation: fits the approximate model once from
/// randomly actioned paths, then controls with the frozen fit.
class OapeController final : public Controller {
 public:
  OapeController(Alg1Config config, OutputVector y_star, int control_dim, int output_dim);

  std::string name() const override { return "oape"; }
  /// Simulates n_paths exploration paths on a clone of the process with
  /// u ~ N(center, std^2 I) and fits the model on all of them.
  void train(const ProcessModel& process, int n_paths, const ControlVector& center, double std_dev,
             std::uint64_t seed);
  /// Fits directly from recorded paths.
  void train(const std::vector<SamplePath>& paths);
  ControlVector act(ProcessModel& process, int t) override;

  const LinearModelFit& fit() const;
  const ApproximateModel& model() const { return *model_; }

 private:
  Alg1Config config_;
  OutputVector y_star_;
  int output_dim_;
  std::unique_ptr<ApproximateModel> model_;
  std::optional<LinearModelFit> fit_;
  ControlVector warm_;
};

struct PgsConfig {
  double alpha = 0.05;
  double eta = 0.01;
  int max_inner_iters = 20;
  /// Iterates with |u| beyond this bound count as divergent.
  double u_guard = 1e3;
  int max_halvings = 5;
  double u_init = 0.0;
  /// Refit (beta, gamma) on the offline store after each finished path.
  bool refit_each_path = true;
  /// Estimate a per-period drift in the output model (refits included).
  bool fit_drift = false;
};

/// Online policy-gradient search on a scalar action. Per period, starting
/// from the previous action, it repeats
///   y ~ process at u,  g = (y - y*)^2 * d/du log p(y; u),  u <- u - alpha g
/// until |du| < eta or max_inner_iters, then records the output observed at
/// the final action.
class RlPgsController final : public Controller {
 public:
  RlPgsController(PgsConfig config, double y_star, PgsDistributionParams params);

  std::string name() const override { return "rl_pgs"; }
  void begin_path(const ProcessModel& process) override;
  ControlVector act(ProcessModel& process, int t) override;
  void observe(int t, const ControlVector& u, const OutputVector& y) override;
  void end_path(const SamplePath& path) override;

  /// Gradient estimate g for one observation.
  double gradient(double y, double u, int t) const;

  const PgsDistributionParams& params() const { return params_; }
  void set_offline_store(std::vector<SamplePath> paths);
  const std::vector<SamplePath>& offline_store() const { return store_; }

 private:
  PgsConfig config_;
  double y_star_;
  PgsDistributionParams params_;
  std::vector<SamplePath> store_;
  double y_prev_ = 0.0;
  double u_prev_ = 0.0;
};

/// n_paths offline paths on clones of the process with u_t ~ N(center, std^2).
std::vector<SamplePath> collect_random_paths(const ProcessModel& process, int n_paths,
                                             const ControlVector& center, double std_dev,
                                             std::uint64_t seed);

/// Runs n_paths learning paths of Algorithm 1 with a fresh controller and
/// returns the last one.
SamplePath rl_alg1_run(const ProcessModel& process, const Alg1Config& config,
                       const OutputVector& y_star, int n_paths, std::uint64_t seed);

/// Trains OAPE on n_paths random-action paths, then returns one controlled path.
SamplePath oape_run(const ProcessModel& process, const Alg1Config& config,
                    const OutputVector& y_star, int n_paths, const ControlVector& explore_center,
                    double explore_std, std::uint64_t seed);

/// One controlled path of Algorithm 2 with the given output-model parameters.
SamplePath rl_pgs_run(const ProcessModel& process, const PgsConfig& config, double y_star,
                      const PgsDistributionParams& params, std::uint64_t seed);

}  // namespace r2r

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "r2r/rng.hpp"
#include "r2r/types.hpp"

namespace r2r {

/// y_t = A + B u_t + delta * t + w_t,  w_t ~ N(0, Lambda).
struct LinearCmpParams {
  Vector A;
  Matrix B;
  Vector delta;
  Matrix Lambda;
  int T = 30;
  Vector y0;  // defaults to zeros when empty
};

/// Y_t = a + b u_t + d_t with an ARIMA(1,1,1) disturbance
///   d_t = d_{t-1} + dd_t,  dd_t = phi dd_{t-1} + w_t - theta w_{t-1}.
struct ArimaProcessParams {
  double a = 0.0;
  double b = 1.0;
  double phi = 0.5;
  double theta = 0.5;
  double sigma = 1.0;
  int T = 80;
  double y0 = 0.0;
};

/// Two-response quadratic surface in three controls. Coefficient layout per
/// response: intercept, u1, u2, u3, u1^2, u2^2, u3^2, u1u2, u1u3, u2u3.
struct QuadraticCmpParams {
  std::array<double, 10> coeffs1{};
  std::array<double, 10> coeffs2{};
  double drift1 = 0.0;
  double drift2 = 0.0;
  double noise1 = 1.0;
  double noise2 = 1.0;
  int T = 30;
  std::array<double, 2> y0{};
};

/// Uncontrolled output y0 + v t + sigma B(t). Control shifts the level by
/// control_gain * u_t (u_0 = 0).
struct WienerParams {
  double y0 = 0.0;
  double v = 0.0;
  double sigma = 1.0;
  int T = 80;
  double control_gain = -1.0;
};

/// Uncontrolled output y_{t-1} + Gamma increment. With beta_is_rate the
/// increment density is beta^alpha y^(alpha-1) e^(-beta y) / Gamma(alpha)
/// (mean alpha / beta); otherwise beta is a scale (mean alpha * beta).
struct GammaParams {
  double alpha = 1.0;
  double beta = 1.0;
  bool beta_is_rate = true;
  double y0 = 0.0;
  int T = 80;
  double control_gain = -1.0;

  double increment_mean() const { return beta_is_rate ? alpha / beta : alpha * beta; }
  double increment_variance() const {
    return beta_is_rate ? alpha / (beta * beta) : alpha * beta * beta;
  }
};

enum class ProcessFamily { linear_cmp, arima, quadratic_cmp, wiener, gamma };

std::string to_string(ProcessFamily family);
ProcessFamily process_family_from_string(const std::string& name);

using ProcessParams =
    std::variant<LinearCmpParams, ArimaProcessParams, QuadraticCmpParams, WienerParams, GammaParams>;

ProcessFamily family_of(const ProcessParams& params);

/// Seeded single-output-stream simulator.
///
/// A period is simulated in two phases: draw() evaluates the transition at
/// a candidate action with fresh noise and stages the resulting state;
/// commit() accepts the most recent draw and advances the period counter.
/// Repeated draws at the same period re-run the period with independent
/// noise, which is how the learning controllers' inner iterations consume
/// real observations. Noise for draw k at period t comes from the stream
/// (seed, t, k), so paths are reproducible regardless of how many draws a
/// controller makes.
class ProcessModel {
 public:
  virtual ~ProcessModel() = default;

  virtual ProcessFamily family() const = 0;
  virtual int control_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual std::unique_ptr<ProcessModel> clone() const = 0;

  int horizon() const { return horizon_; }
  /// Last committed period; 0 before the first commit.
  int period() const { return period_; }
  std::uint64_t seed() const { return seed_; }
  const OutputVector& initial_output() const { return y0_; }
  /// y at the last committed period (y0 before the first commit).
  const OutputVector& last_output() const { return y_last_; }
  std::optional<double> last_disturbance() const { return d_last_; }

  /// Rewinds to period 0 and reseeds the noise stream.
  void reset(std::uint64_t seed);

  /// Observation for period period() + 1 at action u; does not advance.
  OutputVector draw(const ControlVector& u);
  /// Accepts the most recent draw as the period outcome.
  void commit();
  /// draw + commit, with the caller asserting which period this is.
  OutputVector step(const ControlVector& u, int t);

  /// Draws made so far in the current (uncommitted) period.
  int draws_this_period() const { return draw_index_; }
  int total_draws() const { return total_draws_; }
  /// Action of the pending (uncommitted) draw; empty when nothing is staged.
  const ControlVector& staged_action() const { return u_staged_; }

 protected:
  ProcessModel(int horizon, OutputVector y0);

  /// Evaluates the period-t transition at u, staging the next state.
  virtual OutputVector transition(const ControlVector& u, int t, CounterRng& rng) = 0;
  virtual void accept_staged() = 0;
  virtual void reset_state() = 0;
  /// Disturbance associated with the staged transition, if the family has one.
  virtual std::optional<double> staged_disturbance() const { return std::nullopt; }

 private:
  int horizon_;
  OutputVector y0_;
  std::uint64_t seed_ = 0;
  int period_ = 0;
  int draw_index_ = 0;
  int total_draws_ = 0;
  bool has_staged_ = false;
  OutputVector y_staged_;
  ControlVector u_staged_;
  OutputVector y_last_;
  std::optional<double> d_last_;
};

class LinearCmpProcess final : public ProcessModel {
 public:
  explicit LinearCmpProcess(LinearCmpParams params);

  ProcessFamily family() const override { return ProcessFamily::linear_cmp; }
  int control_dim() const override { return static_cast<int>(params_.B.cols()); }
  int output_dim() const override { return static_cast<int>(params_.B.rows()); }
  std::unique_ptr<ProcessModel> clone() const override;
  const LinearCmpParams& params() const { return params_; }

 protected:
  OutputVector transition(const ControlVector& u, int t, CounterRng& rng) override;
  void accept_staged() override {}
  void reset_state() override {}

 private:
  LinearCmpParams params_;
  Matrix noise_factor_;
};

class ArimaProcess final : public ProcessModel {
 public:
  explicit ArimaProcess(ArimaProcessParams params);

  ProcessFamily family() const override { return ProcessFamily::arima; }
  int control_dim() const override { return 1; }
  int output_dim() const override { return 1; }
  std::unique_ptr<ProcessModel> clone() const override;
  const ArimaProcessParams& params() const { return params_; }

 protected:
  OutputVector transition(const ControlVector& u, int t, CounterRng& rng) override;
  void accept_staged() override;
  void reset_state() override;
  std::optional<double> staged_disturbance() const override { return staged_.d; }

 private:
  struct State {
    double d = 0.0;
    double dd = 0.0;
    double w = 0.0;
  };
  ArimaProcessParams params_;
  State state_;
  State staged_;
};

class QuadraticCmpProcess final : public ProcessModel {
 public:
  explicit QuadraticCmpProcess(QuadraticCmpParams params);

  ProcessFamily family() const override { return ProcessFamily::quadratic_cmp; }
  int control_dim() const override { return 3; }
  int output_dim() const override { return 2; }
  std::unique_ptr<ProcessModel> clone() const override;
  const QuadraticCmpParams& params() const { return params_; }

  /// Noise-free response surface at (u, t).
  OutputVector mean_response(const ControlVector& u, int t) const;

 protected:
  OutputVector transition(const ControlVector& u, int t, CounterRng& rng) override;
  void accept_staged() override {}
  void reset_state() override {}

 private:
  QuadraticCmpParams params_;
};

class WienerProcess final : public ProcessModel {
 public:
  explicit WienerProcess(WienerParams params);

  ProcessFamily family() const override { return ProcessFamily::wiener; }
  int control_dim() const override { return 1; }
  int output_dim() const override { return 1; }
  std::unique_ptr<ProcessModel> clone() const override;
  const WienerParams& params() const { return params_; }

 protected:
  OutputVector transition(const ControlVector& u, int t, CounterRng& rng) override;
  void accept_staged() override { level_ = staged_level_; }
  void reset_state() override { level_ = staged_level_ = params_.y0; }
  std::optional<double> staged_disturbance() const override { return staged_level_ - params_.y0; }

 private:
  WienerParams params_;
  double level_;
  double staged_level_;
};

class GammaProcess final : public ProcessModel {
 public:
  explicit GammaProcess(GammaParams params);

  ProcessFamily family() const override { return ProcessFamily::gamma; }
  int control_dim() const override { return 1; }
  int output_dim() const override { return 1; }
  std::unique_ptr<ProcessModel> clone() const override;
  const GammaParams& params() const { return params_; }

 protected:
  OutputVector transition(const ControlVector& u, int t, CounterRng& rng) override;
  void accept_staged() override { level_ = staged_level_; }
  void reset_state() override { level_ = staged_level_ = params_.y0; }
  std::optional<double> staged_disturbance() const override { return staged_level_ - params_.y0; }

 private:
  GammaParams params_;
  double level_;
  double staged_level_;
};

/// Builds the simulator for any parameter set (validates it first).
std::unique_ptr<ProcessModel> make_process(const ProcessParams& params);

/// Throws ConfigError when the parameters violate the family invariants.
void validate(const LinearCmpParams& p);
void validate(const ArimaProcessParams& p);
void validate(const QuadraticCmpParams& p);
void validate(const WienerParams& p);
void validate(const GammaParams& p);

/// d_1..d_T of the ARIMA(1,1,1) disturbance with d_0 = dd_0 = w_0 = 0, drawn
/// from the same noise stream an ArimaProcess with this seed uses.
std::vector<double> arima_disturbance_stream(const ArimaProcessParams& params, std::uint64_t seed);

/// Output variance as the sum of the increment variances:
/// (sum_{i=1}^{t-1} (t-i) (phi^{i-1} (phi-theta))^2 + t) sigma^2.
/// Ignores the covariance between increments, so it understates var(d_t)
/// whenever phi != theta; see arima_output_variance_exact.
double arima_increment_variance_sum(double phi, double theta, double sigma, int t);

/// var(d_t) of the recursion above, including increment cross-covariances:
/// sigma^2 sum_{i=1}^{t} (1 + (phi-theta)(1-phi^{t-i})/(1-phi))^2.
double arima_output_variance_exact(double phi, double theta, double sigma, int t);

/// (phi-theta)^2 S_t sigma^2 with S_t = sum_{i=1}^{t-1} (t-i) phi^{2(i-1)}.
double arima_variance_excess(double phi, double theta, double sigma, int t);

}  // namespace r2r

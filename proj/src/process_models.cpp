#include "r2r/process_models.hpp"

#include <cmath>
#include <sstream>

#include "r2r/errors.hpp"

namespace r2r {

std::string to_string(ProcessFamily family) {
  switch (family) {
    case ProcessFamily::linear_cmp: return "linear_cmp";
    case ProcessFamily::arima: return "arima";
    case ProcessFamily::quadratic_cmp: return "quadratic_cmp";
    case ProcessFamily::wiener: return "wiener";
    case ProcessFamily::gamma: return "gamma";
  }
  return "unknown";
}

ProcessFamily process_family_from_string(const std::string& name) {
  if (name == "linear_cmp") return ProcessFamily::linear_cmp;
  if (name == "arima") return ProcessFamily::arima;
  if (name == "quadratic_cmp") return ProcessFamily::quadratic_cmp;
  if (name == "wiener") return ProcessFamily::wiener;
  if (name == "gamma") return ProcessFamily::gamma;
  throw ConfigError("unknown process family '" + name + "'");
}

ProcessFamily family_of(const ProcessParams& params) {
  return static_cast<ProcessFamily>(params.index());
}

// ---------------------------------------------------------------------------
// ProcessModel

ProcessModel::ProcessModel(int horizon, OutputVector y0)
    : horizon_(horizon), y0_(std::move(y0)), y_last_(y0_) {
  if (horizon_ < 1) throw ConfigError("horizon T must be >= 1");
}

void ProcessModel::reset(std::uint64_t seed) {
  seed_ = seed;
  period_ = 0;
  draw_index_ = 0;
  total_draws_ = 0;
  has_staged_ = false;
  u_staged_.resize(0);
  y_last_ = y0_;
  d_last_.reset();
  reset_state();
}

OutputVector ProcessModel::draw(const ControlVector& u) {
  if (u.size() != control_dim()) {
    std::ostringstream msg;
    msg << "control vector has " << u.size() << " entries, process expects " << control_dim();
    throw DimensionError(msg.str());
  }
  if (!u.allFinite()) throw DimensionError("control vector has non-finite entries");
  const int t = period_ + 1;
  if (t > horizon_) {
    throw HorizonError("period " + std::to_string(t) + " beyond horizon " +
                       std::to_string(horizon_));
  }
  CounterRng rng(derive_seed(seed_, static_cast<std::uint64_t>(t),
                             static_cast<std::uint64_t>(draw_index_)));
  ++draw_index_;
  ++total_draws_;
  y_staged_ = transition(u, t, rng);
  u_staged_ = u;
  has_staged_ = true;
  return y_staged_;
}

void ProcessModel::commit() {
  if (!has_staged_) throw std::logic_error("commit() without a preceding draw()");
  accept_staged();
  d_last_ = staged_disturbance();
  y_last_ = y_staged_;
  has_staged_ = false;
  u_staged_.resize(0);
  draw_index_ = 0;
  ++period_;
}

OutputVector ProcessModel::step(const ControlVector& u, int t) {
  if (t < 1 || t > horizon_) {
    throw HorizonError("period " + std::to_string(t) + " outside 1.." + std::to_string(horizon_));
  }
  if (t != period_ + 1) {
    throw HorizonError("step for period " + std::to_string(t) + " but the model is at period " +
                       std::to_string(period_));
  }
  OutputVector y = draw(u);
  commit();
  return y;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

Matrix symmetric_factor(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

void validate(const LinearCmpParams& p) {
  require(p.T >= 1, "linear_cmp: T must be >= 1");
  require(p.B.rows() >= 1 && p.B.cols() >= 1, "linear_cmp: B must be non-empty");
  require(p.A.size() == p.B.rows(), "linear_cmp: A length must equal rows of B");
  require(p.delta.size() == p.B.rows(), "linear_cmp: delta length must equal rows of B");
  require(p.Lambda.rows() == p.B.rows() && p.Lambda.cols() == p.B.rows(),
          "linear_cmp: Lambda must be m_y x m_y");
  require(p.y0.size() == 0 || p.y0.size() == p.B.rows(), "linear_cmp: y0 length mismatch");
  require(p.A.allFinite() && p.B.allFinite() && p.delta.allFinite() && p.Lambda.allFinite(),
          "linear_cmp: non-finite parameter");
  const double scale = std::max(1.0, p.Lambda.cwiseAbs().maxCoeff());
  require((p.Lambda - p.Lambda.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "linear_cmp: Lambda must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p.Lambda);
  require(eig.eigenvalues().minCoeff() >= -1e-10 * scale,
          "linear_cmp: Lambda must be positive semidefinite");
}

void validate(const ArimaProcessParams& p) {
  require(p.T >= 1, "arima: T must be >= 1");
  require(p.phi > 0.0 && p.phi < 1.0, "arima: phi must lie in (0,1)");
  require(p.theta > 0.0 && p.theta < 1.0, "arima: theta must lie in (0,1)");
  require(p.sigma > 0.0, "arima: sigma must be > 0");
  require(std::isfinite(p.a) && std::isfinite(p.b), "arima: non-finite a or b");
}

void validate(const QuadraticCmpParams& p) {
  require(p.T >= 1, "quadratic_cmp: T must be >= 1");
  require(p.noise1 > 0.0 && p.noise2 > 0.0, "quadratic_cmp: noise1, noise2 must be > 0");
}

void validate(const WienerParams& p) {
  require(p.T >= 1, "wiener: T must be >= 1");
  require(p.sigma > 0.0, "wiener: sigma must be > 0");
}

void validate(const GammaParams& p) {
  require(p.T >= 1, "gamma: T must be >= 1");
  require(p.alpha > 0.0 && p.beta > 0.0, "gamma: alpha and beta must be > 0");
}

// ---------------------------------------------------------------------------
// Families

LinearCmpProcess::LinearCmpProcess(LinearCmpParams params)
    : ProcessModel(params.T, params.y0.size() ? params.y0 : Vector::Zero(params.B.rows()).eval()),
      params_(std::move(params)) {
  validate(params_);
  noise_factor_ = symmetric_factor(params_.Lambda);
}

std::unique_ptr<ProcessModel> LinearCmpProcess::clone() const {
  return std::make_unique<LinearCmpProcess>(*this);
}

OutputVector LinearCmpProcess::transition(const ControlVector& u, int t, CounterRng& rng) {
  Vector z(output_dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return params_.A + params_.B * u + params_.delta * static_cast<double>(t) + noise_factor_ * z;
}

ArimaProcess::ArimaProcess(ArimaProcessParams params)
    : ProcessModel(params.T, Vector::Constant(1, params.y0)), params_(params) {
  validate(params_);
}

std::unique_ptr<ProcessModel> ArimaProcess::clone() const {
  return std::make_unique<ArimaProcess>(*this);
}

OutputVector ArimaProcess::transition(const ControlVector& u, int, CounterRng& rng) {
  const double w = params_.sigma * rng.normal();
  staged_.w = w;
  staged_.dd = params_.phi * state_.dd + w - params_.theta * state_.w;
  staged_.d = state_.d + staged_.dd;
  return Vector::Constant(1, params_.a + params_.b * u[0] + staged_.d);
}

void ArimaProcess::accept_staged() { state_ = staged_; }

void ArimaProcess::reset_state() { state_ = staged_ = State{}; }

QuadraticCmpProcess::QuadraticCmpProcess(QuadraticCmpParams params)
    : ProcessModel(params.T, Eigen::Vector2d(params.y0[0], params.y0[1])), params_(params) {
  validate(params_);
}

std::unique_ptr<ProcessModel> QuadraticCmpProcess::clone() const {
  return std::make_unique<QuadraticCmpProcess>(*this);
}

OutputVector QuadraticCmpProcess::mean_response(const ControlVector& u, int t) const {
  const double u1 = u[0], u2 = u[1], u3 = u[2];
  const std::array<double, 10> basis = {1.0,     u1,      u2,      u3,      u1 * u1,
                                        u2 * u2, u3 * u3, u1 * u2, u1 * u3, u2 * u3};
  double y1 = params_.drift1 * t;
  double y2 = params_.drift2 * t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    y1 += params_.coeffs1[i] * basis[i];
    y2 += params_.coeffs2[i] * basis[i];
  }
  return Eigen::Vector2d(y1, y2);
}

OutputVector QuadraticCmpProcess::transition(const ControlVector& u, int t, CounterRng& rng) {
  OutputVector y = mean_response(u, t);
  y[0] += params_.noise1 * rng.normal();
  y[1] += params_.noise2 * rng.normal();
  return y;
}

WienerProcess::WienerProcess(WienerParams params)
    : ProcessModel(params.T, Vector::Constant(1, params.y0)),
      params_(params),
      level_(params.y0),
      staged_level_(params.y0) {
  validate(params_);
}

std::unique_ptr<ProcessModel> WienerProcess::clone() const {
  return std::make_unique<WienerProcess>(*this);
}

OutputVector WienerProcess::transition(const ControlVector& u, int, CounterRng& rng) {
  // Unit time step: B(t) - B(t-1) ~ N(0, 1).
  staged_level_ = level_ + params_.v + params_.sigma * rng.normal();
  return Vector::Constant(1, staged_level_ + params_.control_gain * u[0]);
}

GammaProcess::GammaProcess(GammaParams params)
    : ProcessModel(params.T, Vector::Constant(1, params.y0)),
      params_(params),
      level_(params.y0),
      staged_level_(params.y0) {
  validate(params_);
}

std::unique_ptr<ProcessModel> GammaProcess::clone() const {
  return std::make_unique<GammaProcess>(*this);
}

OutputVector GammaProcess::transition(const ControlVector& u, int, CounterRng& rng) {
  const double scale = params_.beta_is_rate ? 1.0 / params_.beta : params_.beta;
  staged_level_ = level_ + rng.gamma(params_.alpha, scale);
  return Vector::Constant(1, staged_level_ + params_.control_gain * u[0]);
}

std::unique_ptr<ProcessModel> make_process(const ProcessParams& params) {
  return std::visit(
      [](const auto& p) -> std::unique_ptr<ProcessModel> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearCmpParams>) return std::make_unique<LinearCmpProcess>(p);
        if constexpr (std::is_same_v<P, ArimaProcessParams>) return std::make_unique<ArimaProcess>(p);
        if constexpr (std::is_same_v<P, QuadraticCmpParams>)
          return std::make_unique<QuadraticCmpProcess>(p);
        if constexpr (std::is_same_v<P, WienerParams>) return std::make_unique<WienerProcess>(p);
        if constexpr (std::is_same_v<P, GammaParams>) return std::make_unique<GammaProcess>(p);
      },
      params);
}

// ---------------------------------------------------------------------------
// ARIMA helpers

std::vector<double> arima_disturbance_stream(const ArimaProcessParams& params, std::uint64_t seed) {
  ArimaProcess process(params);
  process.reset(seed);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(params.T));
  const ControlVector zero = ControlVector::Zero(1);
  for (int t = 1; t <= params.T; ++t) {
    process.step(zero, t);
    d.push_back(*process.last_disturbance());
  }
  return d;
}

double arima_increment_variance_sum(double phi, double theta, double sigma, int t) {
  double sum = static_cast<double>(t);
  double phi_pow = 1.0;  // phi^{i-1}
  for (int i = 1; i <= t - 1; ++i) {
    const double c = phi_pow * (phi - theta);
    sum += (t - i) * c * c;
    phi_pow *= phi;
  }
  return sum * sigma * sigma;
}

double arima_output_variance_exact(double phi, double theta, double sigma, int t) {
  double sum = 0.0;
  for (int i = 1; i <= t; ++i) {
    const double c = 1.0 + (phi - theta) * (1.0 - std::pow(phi, t - i)) / (1.0 - phi);
    sum += c * c;
  }
  return sum * sigma * sigma;
}

double arima_variance_excess(double phi, double theta, double sigma, int t) {
  double s = 0.0;
  double phi_sq_pow = 1.0;  // phi^{2(i-1)}
  for (int i = 1; i <= t - 1; ++i) {
    s += (t - i) * phi_sq_pow;
    phi_sq_pow *= phi * phi;
  }
  return (phi - theta) * (phi - theta) * s * sigma * sigma;
}

}  // namespace r2r

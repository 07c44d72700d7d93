#include <doctest.h>

#include "r2r/controllers.hpp"
#include "r2r/errors.hpp"
#include "r2r/metrics.hpp"
#include "r2r/process_models.hpp"
#include "test_support.hpp"

using namespace r2r;

TEST_CASE("noiseless linear CMP at u = 0, t = 1 returns A + delta") {
  LinearCmpProcess process(test::paper_cmp(false));
  process.reset(1);
  const OutputVector y = process.step(Vector::Zero(4), 1);
  CHECK(y[0] == doctest::Approx(-155.21).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(-628.82).epsilon(1e-12));
}

TEST_CASE("noiseless linear CMP isolates the drift in first differences") {
  LinearCmpProcess process(test::paper_cmp(false));
  NullController null(Vector::Zero(4));
  CounterRng rng(9);
  process.reset(3);
  OutputVector y_prev;
  ControlVector u_prev;
  for (int t = 1; t <= 30; ++t) {
    ControlVector u(4);
    for (int i = 0; i < 4; ++i) u[i] = 10.0 * rng.normal();
    const OutputVector y = process.step(u, t);
    if (t >= 2) {
      const Vector d = y - y_prev - test::paper_cmp(false).B * (u - u_prev);
      CHECK(d[0] == doctest::Approx(-17.0).epsilon(1e-9));
      CHECK(d[1] == doctest::Approx(-1.5).epsilon(1e-9));
    }
    y_prev = y;
    u_prev = u;
  }
}

TEST_CASE("step rejects wrong sizes and periods") {
  LinearCmpProcess process(test::paper_cmp());
  process.reset(1);
  CHECK_THROWS_AS(process.step(Vector::Zero(3), 1), DimensionError);
  CHECK_THROWS_AS(process.step(Vector::Zero(4), 2), HorizonError);
  for (int t = 1; t <= 30; ++t) process.step(Vector::Zero(4), t);
  CHECK_THROWS_AS(process.step(Vector::Zero(4), 31), HorizonError);
}

TEST_CASE("invalid parameters are rejected") {
  LinearCmpParams p = test::paper_cmp();
  p.Lambda(0, 0) = -1.0;
  CHECK_THROWS_AS(LinearCmpProcess{p}, ConfigError);
  ArimaProcessParams a;
  a.phi = 1.0;
  CHECK_THROWS_AS(ArimaProcess{a}, ConfigError);
  GammaParams g;
  g.alpha = 0.0;
  CHECK_THROWS_AS(GammaProcess{g}, ConfigError);
}

TEST_CASE("driftless Wiener with vanishing sigma stays at y0") {
  WienerParams p;
  p.y0 = 90.0;
  p.v = 0.0;
  p.sigma = 1e-12;
  WienerProcess process(p);
  NullController null(Vector::Zero(1));
  const SamplePath path = simulate_path(process, null, 5);
  for (const PeriodRecord& r : path.periods) CHECK(r.y[0] == doctest::Approx(90.0).epsilon(1e-9));
}

TEST_CASE("ARIMA with vanishing noise outputs a + b u") {
  ArimaProcessParams p;
  p.a = 91.7;
  p.b = -1.8;
  p.phi = 0.6;
  p.theta = 0.5;
  p.sigma = 1e-12;
  ArimaProcess process(p);
  NullController null(Vector::Zero(1));
  const SamplePath path = simulate_path(process, null, 5);
  for (const PeriodRecord& r : path.periods) {
    CHECK(r.y[0] == doctest::Approx(91.7).epsilon(1e-9));
    CHECK(std::abs(*r.disturbance) < 1e-9);
  }
  for (double d : arima_disturbance_stream(p, 5)) CHECK(std::abs(d) < 1e-9);
}

TEST_CASE("ARIMA disturbance stream matches the simulator's disturbances") {
  ArimaProcessParams p;
  p.a = 91.7;
  p.b = -1.8;
  p.phi = 0.6;
  p.theta = 0.5;
  ArimaProcess process(p);
  NullController null(Vector::Zero(1));
  const SamplePath path = simulate_path(process, null, 11);
  const std::vector<double> d = arima_disturbance_stream(p, 11);
  REQUIRE(d.size() == path.periods.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d[i] == doctest::Approx(*path.periods[i].disturbance).epsilon(1e-14));
    CHECK(path.periods[i].y[0] == doctest::Approx(91.7 + d[i]).epsilon(1e-14));
  }
}

namespace {

/// var(d_t) from the impulse response of the recursion: d_t = sum_j psi_j w_{t-j}.
double impulse_response_variance(double phi, double theta, double sigma, int t) {
  std::vector<double> psi;
  double d = 0.0, dd = 0.0, w_prev = 0.0;
  for (int k = 0; k < t; ++k) {
    const double w = k == 0 ? 1.0 : 0.0;
    dd = phi * dd + w - theta * w_prev;
    d += dd;
    w_prev = w;
    psi.push_back(d);
  }
  double v = 0.0;
  for (double x : psi) v += x * x;
  return v * sigma * sigma;
}

}  // namespace

TEST_CASE("exact ARIMA variance agrees with the impulse-response oracle") {
  for (double phi : {0.2, 0.6, 0.9})
    for (double theta : {0.1, 0.5, 0.8})
      for (int t : {1, 2, 5, 20, 80})
        CHECK(arima_output_variance_exact(phi, theta, 1.3, t) ==
              doctest::Approx(impulse_response_variance(phi, theta, 1.3, t)).epsilon(1e-12));
}

TEST_CASE("variance closed forms reduce to t sigma^2 when phi = theta") {
  for (int t : {1, 5, 20, 80}) {
    CHECK(arima_increment_variance_sum(0.4, 0.4, 2.0, t) == doctest::Approx(4.0 * t));
    CHECK(arima_output_variance_exact(0.4, 0.4, 2.0, t) == doctest::Approx(4.0 * t));
  }
}

TEST_CASE("increment-sum excess equals (phi - theta)^2 S_t sigma^2") {
  for (int t : {1, 5, 20, 80}) {
    double s = 0.0;
    for (int i = 1; i < t; ++i) s += (t - i) * std::pow(0.6, 2 * (i - 1));
    const double excess = arima_increment_variance_sum(0.6, 0.5, 1.5, t) - t * 2.25;
    CHECK(excess == doctest::Approx(0.01 * s * 2.25).epsilon(1e-12));
    CHECK(arima_variance_excess(0.6, 0.5, 1.5, t) == doctest::Approx(excess).epsilon(1e-12));
  }
}

TEST_CASE("Monte Carlo var(d_20) matches the exact variance and not the increment sum") {
  ArimaProcessParams p;
  p.phi = 0.6;
  p.theta = 0.5;
  p.sigma = 1.0;
  p.T = 20;
  std::vector<double> d20;
  for (int i = 0; i < 40000; ++i)
    d20.push_back(arima_disturbance_stream(p, derive_seed(77, static_cast<std::uint64_t>(i))).back());
  const double var = test::sample_variance(d20);
  const double se = var * std::sqrt(2.0 / d20.size());
  CHECK(std::abs(var - arima_output_variance_exact(0.6, 0.5, 1.0, 20)) < 3.0 * se);
  CHECK(std::abs(var - arima_increment_variance_sum(0.6, 0.5, 1.0, 20)) > 10.0 * se);
}

TEST_CASE("equal seeds reproduce paths for every family") {
  std::vector<std::unique_ptr<ProcessModel>> models;
  models.push_back(make_process(test::paper_cmp()));
  models.push_back(make_process(ArimaProcessParams{91.7, -1.8, 0.6, 0.5, 1.0, 80, 90.0}));
  models.push_back(make_process(test::preset("quadratic_rl.json").process));
  models.push_back(make_process(test::preset("wiener_null.json").process));
  models.push_back(make_process(test::preset("gamma_null.json").process));
  for (auto& m : models) {
    RandomActionController random(Vector::Zero(m->control_dim()), 0.5);
    const SamplePath a = simulate_path(*m, random, 123);
    const SamplePath b = simulate_path(*m, random, 123);
    const SamplePath c = simulate_path(*m, random, 124);
    bool same = true, differs = false;
    for (std::size_t t = 0; t < a.periods.size(); ++t) {
      same = same && a.periods[t].y == b.periods[t].y && a.periods[t].u == b.periods[t].u;
      differs = differs || a.periods[t].y != c.periods[t].y;
    }
    CHECK_MESSAGE(same, to_string(m->family()));
    CHECK_MESSAGE(differs, to_string(m->family()));
  }
}

TEST_CASE("redraws within a period are independent and do not advance the clock") {
  ArimaProcess process(ArimaProcessParams{91.7, -1.8, 0.6, 0.5, 1.0, 80, 90.0});
  process.reset(4);
  const double y1 = process.draw(Vector::Zero(1))[0];
  const double y2 = process.draw(Vector::Zero(1))[0];
  CHECK(y1 != y2);
  CHECK(process.period() == 0);
  CHECK(process.draws_this_period() == 2);
  process.commit();
  CHECK(process.period() == 1);
  CHECK(process.last_output()[0] == y2);
}

TEST_CASE("quadratic CMP at u = 0 is drift only") {
  QuadraticCmpParams p = std::get<QuadraticCmpParams>(test::preset("quadratic_rl.json").process);
  QuadraticCmpProcess process(p);
  for (int t : {1, 10, 30}) {
    const OutputVector y = process.mean_response(Vector::Zero(3), t);
    CHECK(y[0] == doctest::Approx(2756.5 - 10.0 * t));
    CHECK(y[1] == doctest::Approx(746.3 + 1.5 * t));
  }
}

TEST_CASE("quadratic CMP surface follows the coefficient layout") {
  QuadraticCmpParams p;
  for (int i = 0; i < 10; ++i) {
    p.coeffs1[i] = i + 1.0;
    p.coeffs2[i] = -(i + 1.0);
  }
  QuadraticCmpProcess process(p);
  Vector u(3);
  u << 0.5, -1.0, 2.0;
  const double expect = 1 + 2 * 0.5 + 3 * -1.0 + 4 * 2.0 + 5 * 0.25 + 6 * 1.0 + 7 * 4.0 +
                        8 * (0.5 * -1.0) + 9 * (0.5 * 2.0) + 10 * (-1.0 * 2.0);
  const OutputVector y = process.mean_response(u, 1);
  CHECK(y[0] == doctest::Approx(expect));
  CHECK(y[1] == doctest::Approx(-expect));
}

TEST_CASE("uncontrolled Wiener MSE is of order 1e2 to 1e3") {
  const ExperimentConfig cfg = test::preset("wiener_null.json");
  auto process = make_process(cfg.process);
  NullController null(Vector::Zero(1));
  double total = 0.0;
  for (int i = 0; i < 10; ++i) total += mse(simulate_path(*process, null, 1000 + i), cfg.y_star);
  CHECK(total / 10 > 100.0);
  CHECK(total / 10 < 10000.0);
}

TEST_CASE("uncontrolled gamma process never decreases") {
  auto process = make_process(test::preset("gamma_null.json").process);
  NullController null(Vector::Zero(1));
  const SamplePath path = simulate_path(*process, null, 31);
  double prev = path.y0[0];
  for (const PeriodRecord& r : path.periods) {
    CHECK(r.y[0] >= prev);
    prev = r.y[0];
  }
}

TEST_CASE("gamma increment mean follows the beta convention") {
  for (bool rate : {true, false}) {
    GammaParams p;
    p.alpha = 0.36;
    p.beta = 0.64;
    p.beta_is_rate = rate;
    p.T = 1000;
    GammaProcess process(p);
    NullController null(Vector::Zero(1));
    std::vector<double> inc;
    for (int s = 0; s < 100; ++s) {
      const SamplePath path = simulate_path(process, null, 500 + s);
      double prev = path.y0[0];
      for (const PeriodRecord& r : path.periods) {
        inc.push_back(r.y[0] - prev);
        prev = r.y[0];
      }
    }
    const double se = std::sqrt(p.increment_variance() / inc.size());
    CHECK(std::abs(test::sample_mean(inc) - p.increment_mean()) < 3.0 * se);
  }
}

TEST_CASE("control shifts Wiener and gamma levels by the gain times the action") {
  WienerParams w;
  w.sigma = 1e-12;
  w.v = 0.0;
  w.y0 = 10.0;
  w.control_gain = -1.5;
  WienerProcess process(w);
  process.reset(1);
  CHECK(process.step(Vector::Constant(1, 2.0), 1)[0] == doctest::Approx(7.0));
  CHECK(process.step(Vector::Constant(1, 2.0), 2)[0] == doctest::Approx(7.0));
  CHECK(process.step(Vector::Constant(1, 0.0), 3)[0] == doctest::Approx(10.0));
}

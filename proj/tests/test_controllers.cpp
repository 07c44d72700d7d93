#include <doctest.h>

#include <algorithm>

#include "r2r/controllers.hpp"
#include "r2r/errors.hpp"
#include "r2r/metrics.hpp"
#include "test_support.hpp"

using namespace r2r;

TEST_CASE("oracle controller on a noiseless drift-free CMP has zero cost") {
  LinearCmpParams p = test::paper_cmp(false);
  p.delta.setZero();
  LinearCmpProcess process(p);
  Vector y_star(2);
  y_star << 1700.0, 150.0;
  OracleLinearController oracle(p, y_star);
  CHECK(total_cost(simulate_path(process, oracle, 1), y_star) < 1e-18);
}

TEST_CASE("EWMA with lambda = 0 never updates") {
  LinearCmpProcess process(test::paper_cmp());
  Vector y_star(2);
  y_star << 1700.0, 150.0;
  EwmaController ewma(test::paper_cmp().B, y_star, 0.0, test::paper_cmp().A);
  const SamplePath path = simulate_path(process, ewma, 3);
  for (const PeriodRecord& r : path.periods) CHECK((r.u - path.periods[0].u).norm() == 0.0);
}

TEST_CASE("EWMA with lambda = 1 compensates exactly from t = 2") {
  LinearCmpParams p = test::scalar_linear(91.7, -1.8, 0.0, 0.0, 20);
  LinearCmpProcess process(p);
  EwmaController ewma(p.B, Vector::Constant(1, 90.0), 1.0, Vector::Constant(1, 50.0));
  const SamplePath path = simulate_path(process, ewma, 3);
  CHECK(std::abs(path.periods[0].y[0] - 90.0) > 1.0);
  for (std::size_t t = 1; t < path.periods.size(); ++t)
    CHECK(path.periods[t].y[0] == doctest::Approx(90.0).epsilon(1e-12));
}

TEST_CASE("EWMA rejects a gain without a right inverse") {
  Matrix B = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(EwmaController(B, Vector::Zero(2), 0.3, Vector::Zero(2)), ConfigError);
}

TEST_CASE("GHR weight schedule is min(1, c / (t + s))") {
  GhrController ghr(-1.8, 90.0, 4.0, 1.0, 91.7);
  CHECK(ghr.weight(1) == 1.0);
  CHECK(ghr.weight(3) == 1.0);
  CHECK(ghr.weight(7) == doctest::Approx(0.5));
  CHECK_THROWS_AS(GhrController(0.0, 90.0, 1.0, 0.0, 0.0), ConfigError);
}

TEST_CASE("GHR with c = 0 is dead reckoning") {
  ArimaProcess process(ArimaProcessParams{91.7, -1.8, 0.6, 0.5, 1.0, 80, 90.0});
  GhrController ghr(-1.8, 90.0, 0.0, 0.0, 91.7);
  const SamplePath path = simulate_path(process, ghr, 8);
  for (const PeriodRecord& r : path.periods) CHECK(r.u[0] == doctest::Approx(17.0 / 18.0));
}

TEST_CASE("GHR with huge s tracks the frozen EWMA trajectory") {
  ArimaProcess process(ArimaProcessParams{91.7, -1.8, 0.6, 0.5, 1.0, 80, 90.0});
  GhrController ghr(-1.8, 90.0, 1.0, 1e15, 91.7);
  EwmaController ewma(Matrix::Constant(1, 1, -1.8), Vector::Constant(1, 90.0), 0.0,
                      Vector::Constant(1, 91.7));
  const SamplePath a = simulate_path(process, ghr, 8);
  const SamplePath b = simulate_path(process, ewma, 8);
  for (std::size_t t = 0; t < a.periods.size(); ++t)
    CHECK(a.periods[t].u[0] == doctest::Approx(b.periods[t].u[0]).epsilon(1e-9));
}

TEST_CASE("GHR with lambda = 1 on ARIMA reduces the cost to the innovation floor") {
  ArimaProcess process(ArimaProcessParams{91.7, -1.8, 0.6, 0.5, 1.0, 80, 90.0});
  GhrController ghr(-1.8, 90.0, 1e9, 0.0, 91.7);
  NullController null(Vector::Zero(1));
  double controlled = 0.0, uncontrolled = 0.0;
  for (int s = 0; s < 20; ++s) {
    controlled += mse(simulate_path(process, ghr, s), Vector::Constant(1, 90.0));
    uncontrolled += mse(simulate_path(process, null, s), Vector::Constant(1, 90.0));
  }
  CHECK(controlled < uncontrolled);
  CHECK(controlled / 20 < 3.0);
}

TEST_CASE("Algorithm 1 on a noiseless linear process converges after identification") {
  LinearCmpParams p = test::scalar_linear(91.7, -1.8, 0.0, 0.0, 10);
  LinearCmpProcess process(p);
  Alg1Config cfg;
  cfg.include_time = false;
  cfg.explore_std = 1.0;
  RlAlg1Controller rl(cfg, Vector::Constant(1, 90.0), 1, 1);
  simulate_path(process, rl, 1);
  const SamplePath second = simulate_path(process, rl, 2);
  CHECK(total_cost(second, Vector::Constant(1, 90.0)) < 1e-16);
  for (const PeriodDiagnostics& d : rl.diagnostics().periods) {
    CHECK(d.inner_iterations <= 2);
    CHECK(d.converged);
    CHECK_FALSE(d.exploratory);
  }
  const Matrix theta = rl.current_fit(1)->theta_hat;
  CHECK(theta(0, 0) == doctest::Approx(91.7));
  CHECK(theta(1, 0) == doctest::Approx(-1.8));

  // Idempotence: another converged path leaves the fit unchanged.
  simulate_path(process, rl, 3);
  CHECK((rl.current_fit(1)->theta_hat - theta).norm() < cfg.epsilon);
}

TEST_CASE("Algorithm 1 is learning by doing") {
  LinearCmpParams p = test::scalar_linear(91.7, -1.8, 0.0, 1.0, 30);
  const double u_star = 17.0 / 18.0;
  std::vector<double> pv_first, pv_last, gap_first, gap_last;
  for (int rep = 0; rep < 20; ++rep) {
    LinearCmpProcess process(p);
    Alg1Config cfg;
    cfg.include_time = false;
    cfg.eta = 0.05;
    cfg.epsilon = 0.05;
    cfg.explore_std = 2.0;
    RlAlg1Controller rl(cfg, Vector::Constant(1, 90.0), 1, 1);
    for (int path = 1; path <= 30; ++path) {
      const SamplePath sp = simulate_path(process, rl, derive_seed(rep, path));
      if (path != 1 && path != 30) continue;
      const PeriodDataset& data = rl.dataset(1);
      std::vector<double> history;
      for (const ControlVector& u : data.u) history.push_back(u[0]);
      const double u_last = sp.periods.back().u[0];
      const double s2 = rl.current_fit(1)->residual_variance[0];
      double mean_u = 0.0;
      for (const PeriodRecord& r : sp.periods) mean_u += r.u[0];
      mean_u /= static_cast<double>(sp.periods.size());
      (path == 1 ? pv_first : pv_last).push_back(prediction_variance(s2, u_last, history));
      (path == 1 ? gap_first : gap_last).push_back(std::abs(mean_u - u_star));
    }
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
  };
  CHECK(median(pv_last) < median(pv_first));
  CHECK(median(gap_last) < median(gap_first));
}

TEST_CASE("OAPE trains once and then holds its fit") {
  LinearCmpProcess process(test::paper_cmp());
  Alg1Config cfg;
  Vector y_star(2);
  y_star << 1700.0, 150.0;
  OapeController oape(cfg, y_star, 4, 2);
  oape.train(process, 10, Vector::Zero(4), 5.0, 77);
  const Matrix theta = oape.fit().theta_hat;
  simulate_path(process, oape, 1);
  simulate_path(process, oape, 2);
  CHECK((oape.fit().theta_hat - theta).norm() == 0.0);
}

TEST_CASE("OAPE and Algorithm 1 agree on noiseless data") {
  LinearCmpParams p = test::scalar_linear(91.7, -1.8, 0.0, 0.0, 10);
  LinearCmpProcess process(p);
  Alg1Config cfg;
  cfg.include_time = false;
  const Vector y_star = Vector::Constant(1, 90.0);
  const SamplePath a = oape_run(process, cfg, y_star, 3, Vector::Zero(1), 1.0, 5);
  const SamplePath b = rl_alg1_run(process, cfg, y_star, 3, 5);
  for (std::size_t t = 0; t < a.periods.size(); ++t)
    CHECK(a.periods[t].u[0] == doctest::Approx(b.periods[t].u[0]).epsilon(1e-9));
}

TEST_CASE("PGS gradient vanishes on target and matches the likelihood-ratio form") {
  PgsDistributionParams params;
  params.beta = -1.0;
  params.gamma = 0.8;
  params.variance_form = VarianceForm::constant;
  RlPgsController pgs(PgsConfig{}, 90.0, params);
  WienerProcess process(WienerParams{90.0, 0.5, 0.9, 80, -1.0});
  process.reset(1);
  pgs.begin_path(process);
  CHECK(pgs.gradient(90.0, 0.0, 1) == 0.0);
  for (double y : {85.0, 88.0, 93.0}) {
    const double expect = (y - 90.0) * (y - 90.0) * params.score(y, 90.0, 0.3, 0.0, 1);
    CHECK(pgs.gradient(y, 0.3, 1) == doctest::Approx(expect));
  }
}

TEST_CASE("PGS step-size halving gives up after the configured number of halvings") {
  PgsDistributionParams params;
  params.beta = -1.0;
  params.gamma = 0.01;
  params.variance_form = VarianceForm::constant;
  PgsConfig cfg;
  cfg.alpha = 1e6;
  cfg.u_guard = 1e-3;
  cfg.max_halvings = 5;
  WienerProcess process(WienerParams{90.0, 0.66, 0.93, 80, -1.0});
  CHECK_THROWS_AS(rl_pgs_run(process, cfg, 80.0, params, 1), ConvergenceError);
}

TEST_CASE("PGS drives a Wiener process toward the target") {
  const ExperimentConfig cfg = test::preset("wiener_pgs.json");
  auto process = make_process(cfg.process);
  const auto offline = collect_random_paths(*process, 200, Vector::Zero(1), 1.0, 3);
  const PgsDistributionParams params = fit_pgs_params(offline, VarianceForm::constant, true);
  NullController null(Vector::Zero(1));
  double controlled = 0.0, uncontrolled = 0.0;
  for (int s = 0; s < 5; ++s) {
    controlled += mse(rl_pgs_run(*process, cfg.controller.pgs, 90.0, params, s), cfg.y_star);
    uncontrolled += mse(simulate_path(*process, null, s), cfg.y_star);
  }
  CHECK(controlled < 0.05 * uncontrolled);
}

TEST_CASE("controllers are deterministic given the seed") {
  LinearCmpProcess process(test::paper_cmp());
  Vector y_star(2);
  y_star << 1700.0, 150.0;
  Alg1Config cfg;
  cfg.explore_std = 5.0;
  const SamplePath a = rl_alg1_run(process, cfg, y_star, 3, 42);
  const SamplePath b = rl_alg1_run(process, cfg, y_star, 3, 42);
  for (std::size_t t = 0; t < a.periods.size(); ++t) {
    CHECK(a.periods[t].u == b.periods[t].u);
    CHECK(a.periods[t].y == b.periods[t].y);
  }
}

TEST_CASE("every controller emits one action per period") {
  LinearCmpProcess process(test::paper_cmp());
  Vector y_star(2);
  y_star << 1700.0, 150.0;
  Alg1Config cfg;
  cfg.explore_std = 5.0;
  RlAlg1Controller rl(cfg, y_star, 4, 2);
  const SamplePath path = simulate_path(process, rl, 1);
  CHECK(path.horizon() == 30);
  CHECK(rl.diagnostics().periods.size() == 30);
  for (int t = 0; t < 30; ++t) CHECK(path.periods[t].t == t + 1);
}

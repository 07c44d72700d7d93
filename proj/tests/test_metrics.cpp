#include <doctest.h>

#include <algorithm>

#include "r2r/errors.hpp"
#include "r2r/metrics.hpp"
#include "test_support.hpp"

using namespace r2r;

TEST_CASE("cost worked examples") {
  const Vector y_star = Vector::Constant(1, 90.0);
  CHECK(total_cost(test::scalar_path({90, 90, 90}), y_star) == 0.0);
  CHECK(total_cost(test::scalar_path({91, 89}), y_star) == 2.0);
  CHECK(mse(test::scalar_path({91, 89}), y_star) == 1.0);

  SamplePath v;
  v.y0 = Vector::Zero(2);
  PeriodRecord r;
  r.t = 1;
  r.u = Vector::Zero(1);
  r.y = Vector(2);
  r.y << 1701, 151;
  v.periods.push_back(r);
  Vector target(2);
  target << 1700, 150;
  CHECK(total_cost(v, target) == 2.0);
}

TEST_CASE("error ratio worked examples") {
  const Vector y_star = Vector::Constant(1, 90.0);
  const auto rho = error_ratio_series(test::scalar_path({99, 90}), y_star);
  CHECK(rho[0][0] == doctest::Approx(0.1));
  CHECK(rho[0][1] == 0.0);
  CHECK_THROWS_AS(error_ratio_series(test::scalar_path({1}), Vector::Zero(1)), DegenerateError);
}

TEST_CASE("metric invariants on random paths") {
  CounterRng rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const int T = 1 + rep % 40;
    std::vector<double> y;
    for (int t = 0; t < T; ++t) y.push_back(90.0 + (rep % 3 == 0 ? 0.0 : rng.normal()));
    const SamplePath path = test::scalar_path(y);
    const Vector y_star = Vector::Constant(1, 90.0);
    const double c = total_cost(path, y_star);
    CHECK(c >= 0.0);
    CHECK(c == doctest::Approx(T * mse(path, y_star)).epsilon(1e-15));
    const bool on_target = std::all_of(y.begin(), y.end(), [](double v) { return v == 90.0; });
    CHECK((c == 0.0) == on_target);
  }
}

TEST_CASE("type-7 quantiles and whiskers") {
  const DistributionSummary s = summarize({4, 1, 3, 2});
  CHECK(s.q1 == doctest::Approx(1.75));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.q3 == doctest::Approx(3.25));
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.std_dev == doctest::Approx(std::sqrt(5.0 / 3.0)));

  const DistributionSummary o = summarize({1, 2, 3, 4, 5, 6, 7, 8, 9, 100});
  CHECK(o.n_outliers == 1);
  CHECK(o.whisker_high == 9.0);
  CHECK(o.max == 100.0);
}

TEST_CASE("summaries are permutation invariant") {
  CounterRng rng(2);
  std::vector<double> v;
  for (int i = 0; i < 57; ++i) v.push_back(rng.normal() * 10.0);
  const DistributionSummary a = summarize(v);
  std::reverse(v.begin(), v.end());
  std::rotate(v.begin(), v.begin() + 13, v.end());
  const DistributionSummary b = summarize(v);
  CHECK(a.median == b.median);
  CHECK(a.q1 == b.q1);
  CHECK(a.q3 == b.q3);
  CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-15));
  CHECK(a.std_dev == doctest::Approx(b.std_dev).epsilon(1e-14));
}

#include <doctest.h>

#include "r2r/approximate_models.hpp"
#include "r2r/errors.hpp"
#include "test_support.hpp"

using namespace r2r;

namespace {

double objective(const ApproximateModel& m, const Matrix& theta, const ControlVector& u, int t,
                 const OutputVector& y_star) {
  return (m.predict(theta, u, t) - y_star).squaredNorm();
}

}  // namespace

TEST_CASE("linear scalar solve of 91.7 - 1.8 u = 90") {
  LinearApproxModel m(1, false);
  Matrix theta(2, 1);
  theta << 91.7, -1.8;
  const ActionResult r =
      m.optimize_action(theta, 1, Vector::Constant(1, 90.0), Vector::Zero(1), ActionBox{});
  CHECK(r.u[0] == doctest::Approx(17.0 / 18.0).epsilon(1e-12));
  CHECK(r.objective < 1e-20);
  CHECK_FALSE(r.on_boundary);
}

TEST_CASE("identity gain gives u = y* - A - delta t") {
  LinearApproxModel m(2, true);
  Matrix theta(4, 2);
  theta << 3.0, -4.0,  // intercepts
      1.0, 0.0,        // u1
      0.0, 1.0,        // u2
      0.5, -0.25;      // t
  Vector y_star(2);
  y_star << 10.0, 20.0;
  const ActionResult r = m.optimize_action(theta, 4, y_star, Vector::Zero(2), ActionBox{});
  CHECK(r.u[0] == doctest::Approx(10.0 - 3.0 - 2.0));
  CHECK(r.u[1] == doctest::Approx(20.0 + 4.0 + 1.0));
}

TEST_CASE("underdetermined linear solve is minimum norm") {
  LinearApproxModel m(4, false);
  Matrix theta = Matrix::Zero(5, 2);
  theta.block(1, 0, 4, 2) = test::paper_cmp().B.transpose();
  Vector y_star(2);
  y_star << 1700.0, 150.0;
  const ActionResult r = m.optimize_action(theta, 1, y_star, Vector::Zero(4), ActionBox{});
  const Matrix B = test::paper_cmp().B;
  const Vector expect = B.completeOrthogonalDecomposition().pseudoInverse() * y_star;
  CHECK((r.u - expect).norm() < 1e-9);
}

TEST_CASE("solutions outside the box are clipped and flagged") {
  LinearApproxModel m(1, false);
  Matrix theta(2, 1);
  theta << 0.0, 1.0;
  const ActionResult r =
      m.optimize_action(theta, 1, Vector::Constant(1, 10.0), Vector::Zero(1), ActionBox{-3, 3});
  CHECK(r.u[0] == 3.0);
  CHECK(r.on_boundary);
}

TEST_CASE("quadratic features follow the documented order") {
  QuadraticApproxModel m(3, true);
  CHECK(m.n_features() == 11);
  Vector u(3);
  u << 2.0, 3.0, 5.0;
  const Vector f = m.features(u, 7);
  Vector expect(11);
  expect << 1, 2, 3, 5, 4, 9, 25, 6, 10, 15, 7;
  CHECK((f - expect).norm() == 0.0);
}

TEST_CASE("model Jacobians match central differences") {
  CounterRng rng(4);
  for (ApproxFamily fam : {ApproxFamily::linear, ApproxFamily::quadratic}) {
    auto m = make_approximate_model(fam, 3, true);
    Matrix theta(m->n_features(), 2);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = rng.normal();
    Vector u(3);
    for (int i = 0; i < 3; ++i) u[i] = rng.normal();
    const Matrix J = m->jacobian(theta, u, 5);
    for (int j = 0; j < 3; ++j) {
      Vector up = u, dn = u;
      const double h = 1e-6;
      up[j] += h;
      dn[j] -= h;
      const Vector fd = (m->predict(theta, up, 5) - m->predict(theta, dn, 5)) / (2 * h);
      for (int i = 0; i < 2; ++i)
        CHECK(J(i, j) == doctest::Approx(fd[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("quadratic optimizer beats 1e4-point random search on 20 random fits") {
  QuadraticApproxModel m(3, false);
  const ActionBox box{-3.0, 3.0};
  CounterRng rng(2718);
  for (int fit = 0; fit < 20; ++fit) {
    Matrix theta(m.n_features(), 2);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = rng.normal();
    Vector y_star(2);
    y_star << 2.0 * rng.normal(), 2.0 * rng.normal();
    const ActionResult r = m.optimize_action(theta, 1, y_star, Vector::Zero(3), box);
    CHECK(r.objective == doctest::Approx(objective(m, theta, r.u, 1, y_star)));
    CHECK((r.u.array() >= -3.0).all());
    CHECK((r.u.array() <= 3.0).all());
    double best = 1e300;
    for (int i = 0; i < 10000; ++i) {
      Vector u(3);
      for (int j = 0; j < 3; ++j) u[j] = -3.0 + 6.0 * rng.uniform();
      best = std::min(best, objective(m, theta, u, 1, y_star));
    }
    CHECK_MESSAGE(r.objective <= best + 1e-9 * (1.0 + best), "fit " << fit);
  }
}

TEST_CASE("quadratic optimizer is deterministic") {
  QuadraticApproxModel m(3, false);
  CounterRng rng(3);
  Matrix theta(m.n_features(), 2);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = rng.normal();
  Vector y_star(2);
  y_star << 1.0, -1.0;
  const ActionResult a = m.optimize_action(theta, 1, y_star, Vector::Zero(3), ActionBox{-3, 3});
  const ActionResult b = m.optimize_action(theta, 1, y_star, Vector::Zero(3), ActionBox{-3, 3});
  CHECK(a.u == b.u);
}

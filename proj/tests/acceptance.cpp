// One PASS/FAIL line per acceptance criterion. Usage: r2r_acceptance [AC1 ... AC9]

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "r2r/approximate_models.hpp"
#include "r2r/harness.hpp"
#include "r2r/protocols.hpp"
#include "test_support.hpp"

using namespace r2r;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[x] ";
    }
    detail << what << "; ";
  }
};

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

Json protocol(const std::string& file) { return load_protocol_document(test::config_dir() / file); }

TheoryCheckResult theory() {
  static const TheoryCheckResult result =
      run_theory_check(theory_check_from_json(protocol("theory_check.json")));
  return result;
}

Outcome ac1() {
  Outcome o;
  const Table1Result r = run_table1(table1_from_json(protocol("table1.json")));
  const std::map<int, std::pair<double, double>> paper{
      {10, {681.30, 4228.74}}, {30, {671.15, 1670.92}}, {50, {672.61, 1019.64}}, {100, {673.02, 904.67}}};
  double prev_oape = 1e300;
  for (const Table1Row& row : r.rows) {
    const auto [rl_ref, oape_ref] = paper.at(row.n_paths);
    const std::string n = "N=" + std::to_string(row.n_paths);
    o.require(std::abs(row.rl.mean - rl_ref) <= 0.25 * rl_ref,
              n + " RL " + fmt(row.rl.mean) + " vs " + fmt(rl_ref) + " +-25%");
    o.require(std::abs(row.oape.mean - oape_ref) <= 0.5 * oape_ref,
              n + " OAPE " + fmt(row.oape.mean) + " vs " + fmt(oape_ref) + " +-50%");
    o.require(row.rl.mean < row.oape.mean, n + " RL < OAPE");
    o.require(row.oape.mean < prev_oape, n + " OAPE decreasing");
    prev_oape = row.oape.mean;
  }
  return o;
}

Outcome ac2() {
  Outcome o;
  const Table2Result r = run_table2(table2_from_json(protocol("table2.json")));
  for (const Table2Row& row : r.rows) {
    const double limit = row.label == "wiener" ? 0.05 : 0.10;
    o.require(row.mean_ratio <= limit,
              row.label + " mean ratio " + fmt(row.mean_ratio) + " <= " + fmt(limit));
    o.require(row.std_ratio <= 0.15, row.label + " std ratio " + fmt(row.std_ratio) + " <= 0.15");
  }
  return o;
}

Outcome ac3() {
  Outcome o;
  const QuadraticResult r = run_quadratic(quadratic_from_json(protocol("quadratic.json")));
  const char* names[] = {"y1 |rho|<0.1", "y2 |rho|<0.2"};
  for (std::size_t c = 0; c < r.fraction_within.size(); ++c)
    o.require(r.fraction_within[c] >= 0.75,
              std::string(names[c]) + " fraction " + fmt(r.fraction_within[c]) + " >= 0.75");
  return o;
}

Outcome ac4() {
  Outcome o;
  const RateReport& r = theory().rate;
  for (std::size_t c = 0; c < r.slope.size(); ++c)
    o.require(std::abs(r.slope[c] + 1.0) <= 0.2,
              r.coordinate_names[c] + " slope " + fmt(r.slope[c]) + " in -1+-0.2");
  o.require(r.bias_covers_zero(), "bias CIs cover 0");
  return o;
}

Outcome ac5() {
  Outcome o;
  const auto& bounds = theory().bounds;
  int ok = 0;
  for (const BoundReport& b : bounds) {
    if (b.action_ok && b.output_ok)
      ++ok;
    else
      o.require(false, b.label + " eta " + fmt(b.eta) + " exceeds bound");
  }
  o.require(bounds.size() == 30, std::to_string(bounds.size()) + " config x eta cells");
  o.require(ok == static_cast<int>(bounds.size()),
            std::to_string(ok) + "/" + std::to_string(bounds.size()) + " within bound + 3 SE");
  return o;
}

Outcome ac6() {
  Outcome o;
  const TheoryCheckResult& t = theory();
  double worst = 0.0;
  for (const auto& p : t.pdf_integrals) worst = std::max(worst, std::abs(p.integral - 1.0));
  o.require(worst <= 1e-4, "max |int pdf - 1| " + fmt(worst) + " <= 1e-4");
  for (const auto& k : t.ks)
    o.require(k.distance <= 0.005, "KS " + fmt(k.distance) + " <= 0.005 (" + std::to_string(k.draws) + " draws)");
  for (const auto& a : t.approx)
    o.require(a.max_gap <= a.bound + 1e-6,
              "snr " + fmt(a.snr) + " gap " + fmt(a.max_gap) + " <= " + fmt(a.bound) + "+1e-6");
  return o;
}

Outcome ac7() {
  Outcome o;
  for (const VarianceLawRow& v : theory().variance_law) {
    const double z = (v.simulated - v.increment_sum) / v.simulated_se;
    o.require(std::abs(z) <= 3.0, "t=" + std::to_string(v.t) + " simulated " + fmt(v.simulated) +
                                      " closed form " + fmt(v.increment_sum) + " (" + fmt(z, 3) +
                                      " SE); with cross-covariances " + fmt(v.exact) + " (" +
                                      fmt((v.simulated - v.exact) / v.simulated_se, 3) + " SE)");
  }
  return o;
}

Outcome ac8() {
  Outcome o;
  const Figure5Result r = run_figure5(figure5_from_json(protocol("figure5.json")));
  const DistributionSummary& ghr = r.comparison.cost_summaries[0];
  const DistributionSummary& pgs = r.comparison.cost_summaries[1];
  o.require(r.comparison.iqr_overlap(0, 1), "IQR GHR [" + fmt(ghr.q1) + ", " + fmt(ghr.q3) +
                                                "] vs PGS [" + fmt(pgs.q1) + ", " + fmt(pgs.q3) + "] overlap");
  const double ratio = pgs.median / ghr.median;
  o.require(ratio <= 2.0 && ratio >= 0.5, "median ratio PGS/GHR " + fmt(ratio) + " within 2x");
  o.detail << "GHR c=" << fmt(r.selected.c) << " s=" << fmt(r.selected.s) << "; ";
  return o;
}

Outcome ac9() {
  Outcome o;

  // Score vs central differences, both variance forms.
  CounterRng rng(909);
  double worst = 0.0;
  for (VarianceForm form : {VarianceForm::time_linear, VarianceForm::constant}) {
    PgsDistributionParams p;
    p.beta = -1.8;
    p.gamma = 0.9;
    p.variance_form = form;
    for (int i = 0; i < 100; ++i) {
      const double y = 90 + 5 * rng.normal(), yp = 90 + 5 * rng.normal();
      const double u = 3 * rng.normal(), up = 3 * rng.normal();
      const int t = 1 + static_cast<int>(rng.uniform() * 80);
      const double h = 1e-5;
      const double fd =
          (p.log_density(y, yp, u + h, up, t) - p.log_density(y, yp, u - h, up, t)) / (2 * h);
      const double s = p.score(y, yp, u, up, t);
      worst = std::max(worst, std::abs(s - fd) / std::max(1.0, std::abs(s)));
    }
  }
  o.require(worst <= 1e-5, "score vs FD rel err " + fmt(worst) + " <= 1e-5");

  // Closed-form / multistart optimizer vs random search.
  QuadraticApproxModel model(3, false);
  const ActionBox box{-3.0, 3.0};
  int wins = 0;
  for (int fit = 0; fit < 20; ++fit) {
    Matrix theta(model.n_features(), 2);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = rng.normal();
    Vector y_star(2);
    y_star << 2 * rng.normal(), 2 * rng.normal();
    const ActionResult r = model.optimize_action(theta, 1, y_star, Vector::Zero(3), box);
    double best = 1e300;
    for (int i = 0; i < 10000; ++i) {
      Vector u(3);
      for (int j = 0; j < 3; ++j) u[j] = -3 + 6 * rng.uniform();
      best = std::min(best, (model.predict(theta, u, 1) - y_star).squaredNorm());
    }
    wins += r.objective <= best + 1e-9 * (1 + best);
  }
  o.require(wins == 20, "optimizer beats 1e4 random points on " + std::to_string(wins) + "/20 fits");

  // Determinism: serial vs parallel, and byte-identical artifacts.
  ExperimentConfig cfg = test::preset("cmp_rl.json");
  cfg.replications = 4;
  cfg.n_learning_paths = 3;
  const auto serial = run_replications_serial(cfg);
  const auto parallel = run_replications_parallel(cfg, 3);
  bool same = serial.size() == parallel.size();
  for (std::size_t i = 0; same && i < serial.size(); ++i)
    same = serial[i].path_costs == parallel[i].path_costs;
  o.require(same, "serial == parallel replications");
  const auto a = test::scratch_dir("acc_a"), b = test::scratch_dir("acc_b");
  cfg.output_dir = a.string();
  run_experiment(cfg);
  cfg.output_dir = b.string();
  run_experiment(cfg);
  bool bytes = true;
  for (const char* f : {"paths.csv", "path_costs.csv", "summary.json", "boxplot.csv"})
    bytes = bytes && test::read_file(a / f) == test::read_file(b / f);
  o.require(bytes, "artifacts byte-identical on rerun");

  // Metric invariants on random paths.
  bool metrics = true;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> y;
    const int T = 1 + rep % 30;
    for (int t = 0; t < T; ++t) y.push_back(90 + (rep % 4 == 0 ? 0.0 : rng.normal()));
    const SamplePath path = test::scalar_path(y);
    const Vector ys = Vector::Constant(1, 90.0);
    const double c = total_cost(path, ys);
    metrics = metrics && c >= 0 && std::abs(c - T * mse(path, ys)) <= 1e-12 * (1 + c) &&
              ((c == 0) == (rep % 4 == 0));
  }
  std::vector<double> v;
  for (int i = 0; i < 31; ++i) v.push_back(rng.normal());
  const DistributionSummary s1 = summarize(v);
  std::reverse(v.begin(), v.end());
  const DistributionSummary s2 = summarize(v);
  metrics = metrics && s1.median == s2.median && s1.q1 == s2.q1 && s1.q3 == s2.q3;
  o.require(metrics, "metric invariants");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
  std::vector<std::string> wanted(argv + 1, argv + argc);
  bool all_pass = true;
  for (const auto& [id, fn] : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    bool pass = false;
    std::string detail;
    try {
      Outcome o = fn();
      pass = o.pass;
      detail = o.detail.str();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    all_pass = all_pass && pass;
    std::cout << id << (pass ? " PASS " : " FAIL ") << detail << std::endl;
  }
  return all_pass ? 0 : 1;
}

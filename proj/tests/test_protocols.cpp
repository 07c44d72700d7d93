#include <doctest.h>

#include <algorithm>

#include "r2r/errors.hpp"
#include "r2r/protocols.hpp"
#include "test_support.hpp"

using namespace r2r;

TEST_CASE("small Table 1 run has the expected shape and ordering") {
  Table1Protocol p =
      table1_from_json(load_protocol_document(test::config_dir() / "table1.json", {"replications=8"}));
  ProtocolOptions o;
  o.output_dir = test::scratch_dir("table1");
  const Table1Result r = run_table1(p, o);
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].n_paths == 10);
  CHECK(r.rows[3].n_paths == 100);
  for (const Table1Row& row : r.rows) {
    CHECK(row.rl.n == 8);
    CHECK(row.rl.mean < row.oape.mean);
  }
  const std::string csv = test::read_file(o.output_dir / "table1.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("protocol seed override is recorded and deterministic") {
  const Json doc = load_protocol_document(test::config_dir() / "table2.json",
                                          {"replications=2", "cases.1.controlled.controller.max_inner_iters=5"});
  ProtocolOptions o;
  o.seed = 7;
  const auto dir_a = test::scratch_dir("table2_a");
  o.output_dir = dir_a;
  const Json a = run_protocol(doc, o);
  CHECK(a["master_seed"] == 7);
  CHECK(a["seed_override"] == true);
  const Json summary = load_json_file(o.output_dir / "summary.json");
  CHECK(summary["master_seed"] == 7);
  o.output_dir = test::scratch_dir("table2_b");
  const Json b = run_protocol(doc, o);
  CHECK(a["report"] == b["report"]);
  CHECK(test::read_file(dir_a / "table2.csv") ==
        test::read_file(o.output_dir / "table2.csv"));
}

TEST_CASE("unknown protocols and bad documents are config errors") {
  Json doc = {{"protocol", "nope"}};
  CHECK_THROWS_AS(run_protocol(doc), ConfigError);
  Json t1 = load_protocol_document(test::config_dir() / "table1.json");
  t1["checkpoints"] = Json::array({0});
  CHECK_THROWS_AS(table1_from_json(t1), ConfigError);
  t1 = load_protocol_document(test::config_dir() / "table1.json");
  t1["unexpected"] = 1;
  CHECK_THROWS_AS(table1_from_json(t1), ConfigError);
}

TEST_CASE("ARIMA variance law from the protocol helper") {
  ArimaProcessParams p{91.7, -1.8, 0.6, 0.5, 1.0, 80, 90.0};
  const auto rows = arima_variance_law(p, {5, 20}, 20000, 3);
  REQUIRE(rows.size() == 2);
  for (const VarianceLawRow& r : rows) {
    CHECK(std::abs(r.simulated - r.exact) < 3.5 * r.simulated_se);
    CHECK(r.increment_sum < r.exact);
  }
}

TEST_CASE("quadratic protocol reports one fraction per output") {
  QuadraticProtocol p = quadratic_from_json(load_protocol_document(
      test::config_dir() / "quadratic.json", {"rl.n_learning_paths=3", "rl.evaluation_paths=2"}));
  const QuadraticResult r = run_quadratic(p);
  REQUIRE(r.fraction_within.size() == 2);
  for (double f : r.fraction_within) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  CHECK(r.abs_error_ratio[0].n == 60);
}

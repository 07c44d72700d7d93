#include <doctest.h>

#include "r2r/config.hpp"
#include "r2r/errors.hpp"
#include "r2r/protocols.hpp"
#include "test_support.hpp"

using namespace r2r;

namespace {

std::string config_error(const Json& j) {
  try {
    experiment_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("every experiment preset parses and validates") {
  for (const auto& entry : std::filesystem::directory_iterator(test::config_dir())) {
    const Json doc = load_json_file(entry.path());
    if (doc.contains("protocol")) continue;
    const ExperimentConfig cfg = experiment_from_json(doc);
    CHECK_NOTHROW(validate(cfg));
  }
}

TEST_CASE("every protocol preset parses") {
  CHECK_NOTHROW(table1_from_json(load_protocol_document(test::config_dir() / "table1.json")));
  CHECK_NOTHROW(table2_from_json(load_protocol_document(test::config_dir() / "table2.json")));
  for (const char* f : {"figure2.json", "figure2_500.json", "figure2_1000.json"})
    CHECK_NOTHROW(figure2_from_json(load_protocol_document(test::config_dir() / f)));
  CHECK_NOTHROW(figure5_from_json(load_protocol_document(test::config_dir() / "figure5.json")));
  CHECK_NOTHROW(quadratic_from_json(load_protocol_document(test::config_dir() / "quadratic.json")));
  CHECK_NOTHROW(
      theory_check_from_json(load_protocol_document(test::config_dir() / "theory_check.json")));
}

TEST_CASE("protocol-level seed and replications reach every experiment") {
  const Table1Protocol p =
      table1_from_json(load_protocol_document(test::config_dir() / "table1.json",
                                              {"master_seed=11", "replications=3"}));
  CHECK(p.rl.master_seed == 11);
  CHECK(p.oape.master_seed == 11);
  CHECK(p.rl.replications == 3);
  CHECK(p.oape.replications == 3);
}

TEST_CASE("JSON round trip is stable") {
  for (const char* f : {"cmp_rl.json", "arima_pgs.json", "quadratic_rl.json", "gamma_pgs.json"}) {
    const ExperimentConfig a = test::preset(f);
    const Json j = to_json(a);
    const ExperimentConfig b = experiment_from_json(j);
    CHECK(to_json(b) == j);
  }
}

TEST_CASE("overrides use dotted keys and JSON values") {
  Json doc = load_json_file(test::config_dir() / "cmp_rl.json");
  apply_overrides(doc, {"controller.epsilon=0.25", "name=x", "replications=4"});
  const ExperimentConfig cfg = experiment_from_json(doc);
  CHECK(cfg.controller.alg1.epsilon == 0.25);
  CHECK(cfg.name == "x");
  CHECK(cfg.replications == 4);
  CHECK_THROWS_AS(apply_overrides(doc, {"novalue"}), ConfigError);
}

TEST_CASE("schema errors name the offending key") {
  Json doc = load_json_file(test::config_dir() / "cmp_rl.json");
  doc["controller"]["epsilon"] = -1.0;
  CHECK(config_error(doc).find("/controller/epsilon") != std::string::npos);

  doc = load_json_file(test::config_dir() / "cmp_rl.json");
  doc["controller"]["bogus"] = 1;
  CHECK(config_error(doc).find("/controller/bogus") != std::string::npos);

  doc = load_json_file(test::config_dir() / "cmp_rl.json");
  doc["y_star"] = Json::array({1.0});
  CHECK(config_error(doc).find("/y_star") != std::string::npos);

  doc = load_json_file(test::config_dir() / "cmp_rl.json");
  doc["process"]["family"] = "unknown";
  CHECK_FALSE(config_error(doc).empty());
}

TEST_CASE("syntax errors report line and column") {
  try {
    parse_json_text("{\n  \"a\": 1,\n  oops\n}", "cfg.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cfg.json:3:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_json_file("/nonexistent/cfg.json"), ConfigError);
}

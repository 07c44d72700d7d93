#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2r/controllers.hpp"
#include "r2r/estimation.hpp"
#include "r2r/process_models.hpp"

namespace r2r {

using Json = nlohmann::ordered_json;

enum class ControllerKind { null, oracle, ewma, ghr, rl_alg1, oape, rl_pgs };

std::string to_string(ControllerKind kind);
ControllerKind controller_kind_from_string(const std::string& name);

/// Controller choice plus every hyperparameter any controller may need.
struct ControllerSpec {
  ControllerKind kind = ControllerKind::null;

  /// Held action for null (zeros when empty).
  ControlVector u_null;

  double ewma_lambda = 0.3;
  /// Initial intercept estimate; the process intercept (A or a) when empty.
  OutputVector ewma_a_init;

  double ghr_c = 1.0;
  double ghr_s = 0.0;
  std::optional<double> ghr_a_init;

  Alg1Config alg1;

  int oape_paths = 10;
  double oape_action_std = 1.0;
  ControlVector oape_action_center;

  PgsConfig pgs;
  int pgs_offline_paths = 1000;
  double pgs_offline_action_std = 1.0;
  VarianceForm pgs_variance_form = VarianceForm::time_linear;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProcessParams process;
  ControllerSpec controller;
  /// Controlled paths per replication; the last one is the evaluation path
  /// unless evaluation_paths > 0.
  int n_learning_paths = 1;
  /// Extra controlled paths after learning whose metrics are reported.
  int evaluation_paths = 0;
  int replications = 1;
  std::uint64_t master_seed = 1;
  OutputVector y_star;
  std::string output_dir;
  /// OpenMP threads for the replication loop; 0 keeps the runtime default.
  int threads = 0;
};

/// Reads a JSON document; parse errors become ConfigError with line and column.
Json load_json_file(const std::filesystem::path& path);
Json parse_json_text(const std::string& text, const std::string& origin = "<string>");

/// Applies "a.b.c=value" overrides; value is parsed as JSON when possible,
/// otherwise kept as a string.
void apply_overrides(Json& doc, const std::vector<std::string>& overrides);

/// Schema-checked conversions. Errors name the offending key as a JSON
/// pointer, e.g. "/controller/epsilon: must be > 0".
ProcessParams process_from_json(const Json& j, const std::string& where = "/process");
ControllerSpec controller_from_json(const Json& j, const std::string& where = "/controller");
ExperimentConfig experiment_from_json(const Json& j, const std::string& where = "");

Json to_json(const ProcessParams& params);
Json to_json(const ControllerSpec& spec);
Json to_json(const ExperimentConfig& config);

/// Cross-field checks: controller/process dimensions, y* size, counts.
void validate(const ExperimentConfig& config);

}  // namespace r2r

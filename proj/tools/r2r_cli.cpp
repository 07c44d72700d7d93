#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "r2r/errors.hpp"
#include "r2r/harness.hpp"
#include "r2r/protocols.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

std::filesystem::path config_dir() {
  if (const char* env = std::getenv("R2R_CONFIG_DIR")) return env;
  return R2R_CONFIG_DIR;
}

/// --output, then R2R_OUTPUT_DIR, then the fallback.
std::filesystem::path output_dir(const std::string& flag, const std::filesystem::path& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("R2R_OUTPUT_DIR"); env && *env) return env;
  return fallback;
}

struct Common {
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string output;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("overrides", c.overrides, "key=value overrides (dotted keys)");
  cmd->add_option("--seed", c.seed, "Master seed replacing the configured one");
  cmd->add_option("--threads", c.threads, "OpenMP threads (default: all)")->check(CLI::NonNegativeNumber);
  cmd->add_option("-o,--output", c.output, "Artifact directory (default: $R2R_OUTPUT_DIR)");
}

r2r::ProtocolOptions options_from(const Common& c, const std::filesystem::path& fallback) {
  r2r::ProtocolOptions o;
  o.seed = c.seed;
  o.threads = c.threads;
  o.output_dir = output_dir(c.output, fallback);
  return o;
}

int simulate(const std::string& path, const Common& c) {
  r2r::ExperimentConfig cfg =
      r2r::experiment_from_json(r2r::load_protocol_document(path, c.overrides));
  if (c.seed) cfg.master_seed = *c.seed;
  cfg.replications = 1;
  cfg.threads = c.threads;
  cfg.output_dir = output_dir(c.output, {}).string();
  const r2r::ExperimentResult result = r2r::run_experiment(cfg);
  const r2r::SamplePath& path_out = result.replications.front().final_path();
  const r2r::PeriodRecord& first = path_out.periods.front();
  std::cout << "t";
  for (Eigen::Index i = 0; i < first.u.size(); ++i) std::cout << ",u_" << i + 1;
  for (Eigen::Index i = 0; i < first.y.size(); ++i) std::cout << ",y_" << i + 1;
  std::cout << ",d\n";
  for (const r2r::PeriodRecord& p : path_out.periods) {
    std::cout << p.t;
    for (Eigen::Index i = 0; i < p.u.size(); ++i) std::cout << "," << r2r::format_double(p.u(i));
    for (Eigen::Index i = 0; i < p.y.size(); ++i) std::cout << "," << r2r::format_double(p.y(i));
    std::cout << "," << (p.disturbance ? r2r::format_double(*p.disturbance) : "") << "\n";
  }
  return 0;
}

int run_document(const std::filesystem::path& path, const Common& c,
                 const std::filesystem::path& fallback) {
  const r2r::Json doc = r2r::load_protocol_document(path, c.overrides);
  const r2r::Json report = r2r::run_protocol(doc, options_from(c, fallback));
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run-to-run process control experiments"};
  app.require_subcommand(1);

  Common common;
  std::string config_path;

  auto* sim = app.add_subcommand("simulate", "Run one replication and print its final path");
  sim->add_option("config", config_path, "Experiment config")->required();
  add_common(sim, common);

  auto* run = app.add_subcommand("run", "Run an experiment or protocol document");
  run->add_option("config", config_path, "Experiment or protocol config")->required();
  add_common(run, common);

  const std::map<std::string, std::string> presets{{"table1", "table1.json"},
                                                   {"table2", "table2.json"},
                                                   {"figure2", "figure2.json"},
                                                   {"figure5", "figure5.json"},
                                                   {"theory-check", "theory_check.json"}};
  std::map<std::string, CLI::App*> preset_cmds;
  for (const auto& [name, file] : presets) {
    auto* cmd = app.add_subcommand(name, "Preset protocol " + file);
    add_common(cmd, common);
    preset_cmds[name] = cmd;
  }
  auto* version = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*version) {
      std::cout << kVersion << "\n";
      return 0;
    }
    if (*sim) return simulate(config_path, common);
    if (*run) return run_document(config_path, common, {});
    for (const auto& [name, cmd] : preset_cmds)
      if (*cmd) return run_document(config_dir() / presets.at(name), common, "r2r_out/" + name);
  } catch (const r2r::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return 2;
}

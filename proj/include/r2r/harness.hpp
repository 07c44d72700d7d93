#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "r2r/config.hpp"
#include "r2r/controllers.hpp"
#include "r2r/metrics.hpp"

namespace r2r {

/// Outcome of one independent replication.
struct ReplicationResult {
  int replication = 0;
  std::uint64_t seed = 0;
  /// Paths whose metrics are reported: the evaluation paths, or the last
  /// learning path when there are none.
  std::vector<SamplePath> evaluation;
  /// Averages over the evaluation paths.
  double total_cost = 0.0;
  double mse = 0.0;
  /// error_ratios[c] concatenates rho_t of output c over the evaluation paths.
  std::vector<std::vector<double>> error_ratios;
  /// Total cost and MSE of every controlled path in run order.
  std::vector<double> path_costs;
  std::vector<double> path_mses;
  /// Diagnostics of the final path.
  PathDiagnostics diagnostics;
  /// Fitted offline parameters etc. for the audit trail.
  Json audit;

  const SamplePath& final_path() const { return evaluation.back(); }
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicationResult> replications;
  SummaryStats summary;
};

/// Replication seed: derive_seed(master_seed, replication, tag("replication")).
std::uint64_t replication_seed(std::uint64_t master_seed, int replication);

/// Builds the controller for one replication. Controllers with an offline
/// stage (OAPE exploration, PGS parameter estimation) run it here with
/// seeds derived from replication_seed.
std::unique_ptr<Controller> make_controller(const ExperimentConfig& config,
                                            const ProcessModel& process, std::uint64_t rep_seed,
                                            Json* audit = nullptr);

ReplicationResult run_replication(const ExperimentConfig& config, int replication);

/// Reference implementation: replications one after another.
std::vector<ReplicationResult> run_replications_serial(const ExperimentConfig& config);
/// Same results, replications distributed over OpenMP threads (threads <= 0
/// keeps the runtime default). Output order is by replication index.
std::vector<ReplicationResult> run_replications_parallel(const ExperimentConfig& config,
                                                         int threads = 0);

SummaryStats summarize_replications(const std::vector<ReplicationResult>& reps);

/// Runs every replication (in parallel) and, when output_dir is non-empty,
/// writes paths.csv, path_costs.csv, summary.json, boxplot.csv and
/// audit/<rep>.json there.
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir);

/// Formats a double with 17 significant digits.
std::string format_double(double x);

Json to_json(const DistributionSummary& s);
Json to_json(const SummaryStats& s);

/// Paired controller comparison over shared seeds.
struct ComparisonReport {
  std::vector<std::string> names;
  /// costs[i][r]: total cost of controller i in replication r (evaluation average).
  std::vector<std::vector<double>> costs;
  std::vector<DistributionSummary> cost_summaries;
  std::vector<ExperimentResult> results;

  /// Interquartile ranges of controllers i and j intersect.
  bool iqr_overlap(std::size_t i, std::size_t j) const;
};

/// Requires equal process family, y*, master seed and replication count.
ComparisonReport compare_controllers(const std::vector<ExperimentConfig>& configs);

/// replication, controller costs as columns; then boxplot rows.
void write_comparison(const ComparisonReport& report, const std::filesystem::path& dir);

}  // namespace r2r

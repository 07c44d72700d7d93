#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "r2r/harness.hpp"
#include "r2r/theory.hpp"

namespace r2r {

/// Settings shared by every protocol run.
struct ProtocolOptions {
  /// Replaces the master seed of every experiment in the protocol.
  std::optional<std::uint64_t> seed;
  /// OpenMP threads; 0 keeps the runtime default.
  int threads = 0;
  /// Artifacts go here when non-empty.
  std::filesystem::path output_dir;
};

// ---------------------------------------------------------------------------
// RL vs OAPE on the linear CMP

struct Table1Protocol {
  ExperimentConfig rl;
  ExperimentConfig oape;
  /// Learning budgets N at which both controllers are scored.
  std::vector<int> checkpoints{10, 30, 50, 100};
};

struct Table1Row {
  int n_paths = 0;
  /// MSE of the N-th learning path over replications.
  DistributionSummary rl;
  /// MSE of the controlled path after fitting on N exploration paths.
  DistributionSummary oape;
};

struct Table1Result {
  std::vector<Table1Row> rows;
};

Table1Result run_table1(const Table1Protocol& protocol, const ProtocolOptions& options = {});

// ---------------------------------------------------------------------------
// Uncontrolled vs policy-gradient control on stochastic degradation processes

struct Table2Case {
  std::string label;
  ExperimentConfig baseline;
  ExperimentConfig controlled;
};

struct Table2Protocol {
  std::vector<Table2Case> cases;
  /// |rho| threshold for the reported within-band fraction.
  double error_ratio_threshold = 0.1;
};

struct Table2Row {
  std::string label;
  SummaryStats baseline;
  SummaryStats controlled;
  /// controlled / baseline mean MSE and MSE standard deviation.
  double mean_ratio = 0.0;
  double std_ratio = 0.0;
  /// Share of controlled periods with |rho| below the threshold.
  double error_ratio_within = 0.0;
};

struct Table2Result {
  std::vector<Table2Row> rows;
};

Table2Result run_table2(const Table2Protocol& protocol, const ProtocolOptions& options = {});

// ---------------------------------------------------------------------------
// Known-parameter EWMA vs learning controller, per-path costs

struct Figure2Protocol {
  ExperimentConfig ewma;
  ExperimentConfig rl;
};

struct Figure2Result {
  /// Final-path total costs, paired by replication.
  ComparisonReport comparison;
  /// Total cost of path i over replications, i = 1..n_learning_paths.
  std::vector<DistributionSummary> ewma_curve;
  std::vector<DistributionSummary> rl_curve;
};

Figure2Result run_figure2(const Figure2Protocol& protocol, const ProtocolOptions& options = {});

// ---------------------------------------------------------------------------
// Tuned GHR vs policy-gradient control on the ARIMA process

struct Figure5Protocol {
  ExperimentConfig ghr;
  ExperimentConfig pgs;
  std::vector<double> c_grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0};
  std::vector<double> s_grid{0.0, 1.0, 4.0, 16.0};
  /// Replications of each grid point, on seeds disjoint from the comparison.
  int tuning_replications = 30;
};

struct GhrTuningPoint {
  double c = 0.0;
  double s = 0.0;
  double mean_cost = 0.0;
};

struct Figure5Result {
  GhrTuningPoint selected;
  std::vector<GhrTuningPoint> tuning;
  ComparisonReport comparison;  // [0] = GHR, [1] = PGS
};

Figure5Result run_figure5(const Figure5Protocol& protocol, const ProtocolOptions& options = {});

// ---------------------------------------------------------------------------
// Quadratic CMP error ratios after learning

struct QuadraticProtocol {
  ExperimentConfig rl;
  /// Per-output |rho| thresholds.
  std::vector<double> thresholds{0.1, 0.2};
};

struct QuadraticResult {
  /// Share of evaluation periods with |rho_c| below thresholds[c], pooled
  /// over replications.
  std::vector<double> fraction_within;
  std::vector<DistributionSummary> abs_error_ratio;
  SummaryStats summary;
};

QuadraticResult run_quadratic(const QuadraticProtocol& protocol,
                              const ProtocolOptions& options = {});

// ---------------------------------------------------------------------------
// Executable theory checks

struct TheoryCheckProtocol {
  std::uint64_t seed = 1;

  std::vector<double> etas{0.1, 0.5, 1.0};
  int bound_trials = 10000;

  /// Estimator variance rate on a linear process with i.i.d. actions.
  LinearCmpParams rate_process;
  bool rate_include_time = false;
  std::vector<int> rate_n_grid{25, 50, 100, 200, 400};
  int rate_replications = 200;
  double rate_action_std = 1.0;

  int pdf_moment_sets = 50;
  int ks_moment_sets = 3;
  int ks_draws = 1000000;
  std::vector<double> approx_snr{0.5, 1.0, 2.0, 4.0, 8.0};
  int approx_grid_points = 1000;

  ArimaProcessParams arima;
  std::vector<int> variance_times{5, 20, 80};
  int variance_paths = 100000;
};

struct PdfIntegralCheck {
  RatioMoments moments;
  double integral = 0.0;
};

struct KsCheck {
  RatioMoments moments;
  int draws = 0;
  double distance = 0.0;
};

struct ApproxGapCheck {
  double snr = 0.0;
  RatioMoments moments;
  double max_gap = 0.0;
  double bound = 0.0;
};

struct VarianceLawRow {
  int t = 0;
  double simulated = 0.0;
  double simulated_se = 0.0;
  /// Sum of increment variances (the printed closed form).
  double increment_sum = 0.0;
  /// Including increment cross-covariances.
  double exact = 0.0;
};

struct TheoryCheckResult {
  std::vector<BoundReport> bounds;
  RateReport rate;
  std::vector<PdfIntegralCheck> pdf_integrals;
  std::vector<KsCheck> ks;
  std::vector<ApproxGapCheck> approx;
  std::vector<VarianceLawRow> variance_law;
};

/// Integral of the ratio density over the real line: adaptive Gauss-Kronrod
/// on panels that widen geometrically away from mu1 / mu2, plus the two
/// infinite tails beyond |u| = 1e4.
double ratio_pdf_integral(const RatioDistribution& dist);

/// Kolmogorov-Smirnov distance between ratio_cdf and the empirical CDF of
/// n exact draws.
double ratio_ks_distance(const RatioDistribution& dist, int n, std::uint64_t seed);

/// sup |F - F*| over n points spread across the central 1 - 1e-6 mass.
double ratio_approx_max_gap(const RatioDistribution& dist, int n);

/// Random moment sets with |mu2| / sigma2 >= min_snr.
std::vector<RatioMoments> random_ratio_moments(int count, double min_snr, std::uint64_t seed);

/// Monte Carlo var(d_t) of the uncontrolled ARIMA disturbance.
std::vector<VarianceLawRow> arima_variance_law(const ArimaProcessParams& params,
                                               const std::vector<int>& times, int n_paths,
                                               std::uint64_t seed);

TheoryCheckResult run_theory_check(const TheoryCheckProtocol& protocol,
                                   const ProtocolOptions& options = {});

// ---------------------------------------------------------------------------
// Protocol documents

/// Loads a protocol document, inlining experiment files it references by
/// name (resolved against the document's directory), then applies
/// overrides. Documents without a "protocol" key are plain experiments.
Json load_protocol_document(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides = {});

Table1Protocol table1_from_json(const Json& doc);
Table2Protocol table2_from_json(const Json& doc);
Figure2Protocol figure2_from_json(const Json& doc);
Figure5Protocol figure5_from_json(const Json& doc);
QuadraticProtocol quadratic_from_json(const Json& doc);
TheoryCheckProtocol theory_check_from_json(const Json& doc);

Json to_json(const Table1Result& r);
Json to_json(const Table2Result& r);
Json to_json(const Figure2Result& r);
Json to_json(const Figure5Result& r);
Json to_json(const QuadraticResult& r);
Json to_json(const TheoryCheckResult& r);
Json to_json(const RatioMoments& m);
Json to_json(const BoundReport& r);
Json to_json(const RateReport& r);

/// Runs the protocol named by doc["protocol"] (or a plain experiment),
/// writes artifacts when options.output_dir is set and returns the report.
Json run_protocol(const Json& doc, const ProtocolOptions& options = {});

}  // namespace r2r

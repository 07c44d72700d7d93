#include "r2r/harness.hpp"

#include <omp.h>

#include <cstdio>
#include <exception>
#include <fstream>

#include "r2r/errors.hpp"

namespace r2r {

std::uint64_t replication_seed(std::uint64_t master_seed, int replication) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(replication), tag_hash("replication"));
}

namespace {

Json matrix_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

double known_scalar_gain(const ProcessParams& params) {
  if (const auto* p = std::get_if<ArimaProcessParams>(&params)) return p->b;
  if (const auto* p = std::get_if<WienerParams>(&params)) return p->control_gain;
  if (const auto* p = std::get_if<GammaParams>(&params)) return p->control_gain;
  throw ConfigError("/controller: no scalar known gain for this process family");
}

double known_scalar_intercept(const ProcessParams& params) {
  if (const auto* p = std::get_if<ArimaProcessParams>(&params)) return p->a;
  if (const auto* p = std::get_if<WienerParams>(&params)) return p->y0;
  if (const auto* p = std::get_if<GammaParams>(&params)) return p->y0;
  throw ConfigError("/controller: no scalar known intercept for this process family");
}

}  // namespace

std::unique_ptr<Controller> make_controller(const ExperimentConfig& config,
                                            const ProcessModel& process, std::uint64_t rep_seed,
                                            Json* audit) {
  const ControllerSpec& s = config.controller;
  const int m_u = process.control_dim();
  const int m_y = process.output_dim();
  switch (s.kind) {
    case ControllerKind::null:
      return std::make_unique<NullController>(s.u_null.size() ? s.u_null
                                                               : ControlVector::Zero(m_u).eval());
    case ControllerKind::oracle:
      return std::make_unique<OracleLinearController>(std::get<LinearCmpParams>(config.process),
                                                      config.y_star);
    case ControllerKind::ewma: {
      const auto& p = std::get<LinearCmpParams>(config.process);
      return std::make_unique<EwmaController>(p.B, config.y_star, s.ewma_lambda,
                                              s.ewma_a_init.size() ? s.ewma_a_init : p.A);
    }
    case ControllerKind::ghr:
      return std::make_unique<GhrController>(
          known_scalar_gain(config.process), config.y_star[0], s.ghr_c, s.ghr_s,
          s.ghr_a_init.value_or(known_scalar_intercept(config.process)));
    case ControllerKind::rl_alg1:
      return std::make_unique<RlAlg1Controller>(s.alg1, config.y_star, m_u, m_y);
    case ControllerKind::oape: {
      auto c = std::make_unique<OapeController>(s.alg1, config.y_star, m_u, m_y);
      const ControlVector center =
          s.oape_action_center.size() ? s.oape_action_center : ControlVector::Zero(m_u).eval();
      c->train(process, s.oape_paths, center, s.oape_action_std,
               derive_seed(rep_seed, tag_hash("oape-explore")));
      if (audit) (*audit)["oape_theta"] = matrix_json(c->fit().theta_hat);
      return c;
    }
    case ControllerKind::rl_pgs: {
      auto offline = collect_random_paths(process, s.pgs_offline_paths, ControlVector::Zero(1),
                                          s.pgs_offline_action_std,
                                          derive_seed(rep_seed, tag_hash("pgs-offline")));
      const PgsDistributionParams params = fit_pgs_params(offline, s.pgs_variance_form, s.pgs.fit_drift);
      if (audit)
        (*audit)["pgs_offline_fit"] = {{"beta", params.beta},
                                       {"gamma", params.gamma},
                                       {"drift", params.drift},
                                       {"variance_form", to_string(params.variance_form)},
                                       {"offline_paths", s.pgs_offline_paths}};
      auto c = std::make_unique<RlPgsController>(s.pgs, config.y_star[0], params);
      c->set_offline_store(std::move(offline));
      return c;
    }
  }
  throw ConfigError("/controller/kind: unsupported");
}

ReplicationResult run_replication(const ExperimentConfig& config, int replication) {
  ReplicationResult out;
  out.replication = replication;
  out.seed = replication_seed(config.master_seed, replication);
  out.audit = Json::object();
  auto process = make_process(config.process);
  auto controller = make_controller(config, *process, out.seed, &out.audit);

  const int total = config.n_learning_paths + config.evaluation_paths;
  int warnings = 0;
  for (int i = 0; i < total; ++i) {
    SamplePath path = simulate_path(
        *process, *controller, derive_seed(out.seed, tag_hash("path"), static_cast<std::uint64_t>(i)));
    out.path_costs.push_back(total_cost(path, config.y_star));
    out.path_mses.push_back(mse(path, config.y_star));
    warnings += static_cast<int>(controller->diagnostics().warnings.size());
    const bool keep = config.evaluation_paths > 0 ? i >= config.n_learning_paths : i == total - 1;
    if (keep) out.evaluation.push_back(std::move(path));
  }
  out.diagnostics = controller->diagnostics();

  bool ratios_defined = (config.y_star.array() != 0.0).all();
  if (ratios_defined) out.error_ratios.assign(static_cast<std::size_t>(config.y_star.size()), {});
  for (const SamplePath& path : out.evaluation) {
    out.total_cost += total_cost(path, config.y_star);
    out.mse += mse(path, config.y_star);
    if (ratios_defined) {
      const auto rho = error_ratio_series(path, config.y_star);
      for (std::size_t c = 0; c < rho.size(); ++c)
        out.error_ratios[c].insert(out.error_ratios[c].end(), rho[c].begin(), rho[c].end());
    }
  }
  out.total_cost /= static_cast<double>(out.evaluation.size());
  out.mse /= static_cast<double>(out.evaluation.size());

  Json& a = out.audit;
  a["replication"] = replication;
  a["seed"] = out.seed;
  a["controller"] = controller->name();
  a["paths_run"] = total;
  a["warnings_total"] = warnings;
  Json periods = Json::array();
  for (const PeriodDiagnostics& d : out.diagnostics.periods)
    periods.push_back({{"t", d.t},
                       {"inner_iterations", d.inner_iterations},
                       {"converged", d.converged},
                       {"exploratory", d.exploratory},
                       {"boundary_action", d.boundary_action},
                       {"step_halvings", d.step_halvings}});
  a["final_path_periods"] = periods;
  if (out.diagnostics.theta.size()) a["final_theta"] = matrix_json(out.diagnostics.theta);
  if (auto* pgs = dynamic_cast<RlPgsController*>(controller.get()))
    a["pgs_final_params"] = {{"beta", pgs->params().beta},
                             {"gamma", pgs->params().gamma},
                             {"drift", pgs->params().drift}};
  return out;
}

std::vector<ReplicationResult> run_replications_serial(const ExperimentConfig& config) {
  std::vector<ReplicationResult> out;
  out.reserve(static_cast<std::size_t>(config.replications));
  for (int r = 0; r < config.replications; ++r) out.push_back(run_replication(config, r));
  return out;
}

std::vector<ReplicationResult> run_replications_parallel(const ExperimentConfig& config,
                                                         int threads) {
  const int n = config.replications;
  std::vector<ReplicationResult> out(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(team)
  for (int r = 0; r < n; ++r) {
    try {
      out[static_cast<std::size_t>(r)] = run_replication(config, r);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

SummaryStats summarize_replications(const std::vector<ReplicationResult>& reps) {
  std::vector<double> mses;
  std::vector<double> costs;
  for (const ReplicationResult& r : reps) {
    mses.push_back(r.mse);
    costs.push_back(r.total_cost);
  }
  return {summarize(mses), summarize(costs), std::nullopt};
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  ExperimentResult result;
  result.config = config;
  result.replications = run_replications_parallel(config, config.threads);
  result.summary = summarize_replications(result.replications);
  if (!config.output_dir.empty()) write_artifacts(result, config.output_dir);
  return result;
}

// ---------------------------------------------------------------------------
// Persistence

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json to_json(const DistributionSummary& s) {
  return {{"n", s.n},
          {"mean", s.mean},
          {"std", s.std_dev},
          {"min", s.min},
          {"q1", s.q1},
          {"median", s.median},
          {"q3", s.q3},
          {"max", s.max},
          {"whisker_low", s.whisker_low},
          {"whisker_high", s.whisker_high},
          {"n_outliers", s.n_outliers}};
}

Json to_json(const SummaryStats& s) {
  Json j = {{"mean_mse", s.mse.mean},
            {"std_mse", s.mse.std_dev},
            {"mean_cost", s.cost.mean},
            {"std_cost", s.cost.std_dev},
            {"mse", to_json(s.mse)},
            {"cost", to_json(s.cost)}};
  if (s.ratio_vs_baseline) j["ratio_vs_baseline"] = *s.ratio_vs_baseline;
  return j;
}

namespace {

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

std::string boxplot_header() {
  return "series,n,min,whisker_low,q1,median,q3,whisker_high,max,n_outliers,mean,std\n";
}

std::string boxplot_row(const std::string& label, const DistributionSummary& s) {
  return label + "," + std::to_string(s.n) + "," + format_double(s.min) + "," +
         format_double(s.whisker_low) + "," + format_double(s.q1) + "," +
         format_double(s.median) + "," + format_double(s.q3) + "," +
         format_double(s.whisker_high) + "," + format_double(s.max) + "," +
         std::to_string(s.n_outliers) + "," + format_double(s.mean) + "," +
         format_double(s.std_dev) + "\n";
}

}  // namespace

void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "audit");
  const auto& reps = result.replications;
  if (reps.empty()) return;

  const SamplePath& first = reps.front().final_path();
  const auto m_u = first.periods.front().u.size();
  const auto m_y = first.periods.front().y.size();
  std::string csv = "replication,t";
  for (Eigen::Index i = 1; i <= m_u; ++i) csv += ",u_" + std::to_string(i);
  for (Eigen::Index i = 1; i <= m_y; ++i) csv += ",y_" + std::to_string(i);
  csv += ",d\n";
  for (const ReplicationResult& r : reps) {
    for (const PeriodRecord& rec : r.final_path().periods) {
      csv += std::to_string(r.replication) + "," + std::to_string(rec.t);
      for (Eigen::Index i = 0; i < m_u; ++i) csv += "," + format_double(rec.u[i]);
      for (Eigen::Index i = 0; i < m_y; ++i) csv += "," + format_double(rec.y[i]);
      csv += "," + (rec.disturbance ? format_double(*rec.disturbance) : std::string());
      csv += "\n";
    }
  }
  write_text(dir / "paths.csv", csv);

  std::string costs = "replication,path,total_cost,mse\n";
  for (const ReplicationResult& r : reps)
    for (std::size_t i = 0; i < r.path_costs.size(); ++i)
      costs += std::to_string(r.replication) + "," + std::to_string(i + 1) + "," +
               format_double(r.path_costs[i]) + "," + format_double(r.path_mses[i]) + "\n";
  write_text(dir / "path_costs.csv", costs);

  std::string box = boxplot_header();
  box += boxplot_row("mse", result.summary.mse);
  box += boxplot_row("total_cost", result.summary.cost);
  if (!reps.front().error_ratios.empty()) {
    for (std::size_t c = 0; c < reps.front().error_ratios.size(); ++c) {
      std::vector<double> all;
      for (const ReplicationResult& r : reps)
        all.insert(all.end(), r.error_ratios[c].begin(), r.error_ratios[c].end());
      box += boxplot_row("error_ratio_" + std::to_string(c + 1), summarize(all));
    }
  }
  write_text(dir / "boxplot.csv", box);

  Json summary;
  summary["schema_version"] = 1;
  summary["config"] = to_json(result.config);
  summary["config"].erase("output_dir");
  summary["master_seed"] = result.config.master_seed;
  summary["replications"] = result.config.replications;
  summary["summary"] = to_json(result.summary);
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  for (const ReplicationResult& r : reps)
    write_text(dir / "audit" / (std::to_string(r.replication) + ".json"), r.audit.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Comparison

bool ComparisonReport::iqr_overlap(std::size_t i, std::size_t j) const {
  const auto& a = cost_summaries.at(i);
  const auto& b = cost_summaries.at(j);
  return a.q1 <= b.q3 && b.q1 <= a.q3;
}

ComparisonReport compare_controllers(const std::vector<ExperimentConfig>& configs) {
  if (configs.size() < 2) throw ConfigError("compare_controllers needs at least two configs");
  const ExperimentConfig& ref = configs.front();
  for (const ExperimentConfig& c : configs) {
    if (family_of(c.process) != family_of(ref.process))
      throw ConfigError("compare_controllers: process families differ");
    if (c.y_star.size() != ref.y_star.size() || c.y_star != ref.y_star)
      throw ConfigError("compare_controllers: targets differ");
    if (c.master_seed != ref.master_seed)
      throw ConfigError("compare_controllers: master seeds differ");
    if (c.replications != ref.replications)
      throw ConfigError("compare_controllers: replication counts differ");
  }
  ComparisonReport report;
  for (const ExperimentConfig& c : configs) {
    ExperimentConfig run = c;
    run.output_dir.clear();
    ExperimentResult result = run_experiment(run);
    report.names.push_back(c.name);
    std::vector<double> costs;
    for (const ReplicationResult& r : result.replications) costs.push_back(r.total_cost);
    report.cost_summaries.push_back(summarize(costs));
    report.costs.push_back(std::move(costs));
    report.results.push_back(std::move(result));
  }
  return report;
}

void write_comparison(const ComparisonReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string csv = "replication";
  for (const std::string& n : report.names) csv += "," + n;
  csv += "\n";
  const std::size_t reps = report.costs.front().size();
  for (std::size_t r = 0; r < reps; ++r) {
    csv += std::to_string(r);
    for (const auto& col : report.costs) csv += "," + format_double(col[r]);
    csv += "\n";
  }
  write_text(dir / "comparison.csv", csv);
  std::string box = boxplot_header();
  for (std::size_t i = 0; i < report.names.size(); ++i)
    box += boxplot_row(report.names[i], report.cost_summaries[i]);
  write_text(dir / "boxplot.csv", box);
}

}  // namespace r2r

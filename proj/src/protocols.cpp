#include "r2r/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "json_reader.hpp"
#include "r2r/errors.hpp"

namespace r2r {

using detail::Reader;
using detail::rethrow_at;

namespace {

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

ExperimentConfig with_options(ExperimentConfig cfg, const ProtocolOptions& options) {
  if (options.seed) cfg.master_seed = *options.seed;
  cfg.threads = options.threads;
  cfg.output_dir.clear();
  return cfg;
}

ExperimentResult run_config(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult result;
  result.config = cfg;
  result.replications = run_replications_parallel(cfg, cfg.threads);
  result.summary = summarize_replications(result.replications);
  return result;
}

void maybe_write(const ExperimentResult& result, const ProtocolOptions& options,
                 const std::string& subdir) {
  if (!options.output_dir.empty()) write_artifacts(result, options.output_dir / subdir);
}

std::string slug(std::string s) {
  for (char& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
  return s;
}

std::vector<int> int_list(Reader& r, const std::string& key, std::vector<int> fallback) {
  if (!r.has(key)) {
    r.ignore(key);
    return fallback;
  }
  const Json& v = r.raw(key);
  if (!v.is_array() || v.empty()) r.fail(key, "expected a non-empty array of integers");
  std::vector<int> out;
  for (const Json& x : v) {
    if (!x.is_number_integer() || x.get<int>() < 1) r.fail(key, "entries must be positive integers");
    out.push_back(x.get<int>());
  }
  return out;
}

std::vector<double> double_list(Reader& r, const std::string& key, std::vector<double> fallback) {
  if (!r.has(key)) {
    r.ignore(key);
    return fallback;
  }
  const Vector v = r.vector(key);
  return {v.data(), v.data() + v.size()};
}

/// Experiment sub-document with protocol-wide master_seed / replications
/// pushed down.
ExperimentConfig experiment_at(Reader& r, const Json& doc, const std::string& key) {
  Json j = r.object(key);
  if (doc.contains("master_seed")) j["master_seed"] = doc["master_seed"];
  if (doc.contains("replications")) j["replications"] = doc["replications"];
  return experiment_from_json(j, r.path(key));
}

Reader protocol_reader(const Json& doc, const std::string& expected) {
  Reader r(doc, "");
  if (r.string("protocol") != expected) r.fail("protocol", "expected \"" + expected + "\"");
  r.string("name", expected);
  r.unsigned_integer("master_seed", 1);
  r.ignore("replications");
  r.ignore("output_dir");
  return r;
}

const std::set<std::string>& experiment_keys() {
  static const std::set<std::string> keys{"rl", "oape", "ewma", "ghr", "pgs", "baseline",
                                          "controlled"};
  return keys;
}

void inline_references(Json& j, const std::filesystem::path& base) {
  if (j.is_array()) {
    for (Json& x : j) inline_references(x, base);
    return;
  }
  if (!j.is_object()) return;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_string() && experiment_keys().count(it.key()))
      it.value() = load_json_file(base / it.value().get<std::string>());
    else
      inline_references(it.value(), base);
  }
}

Json summary_json(const DistributionSummary& s) { return to_json(s); }

}  // namespace

// ---------------------------------------------------------------------------
// Table 1

Table1Result run_table1(const Table1Protocol& protocol, const ProtocolOptions& options) {
  if (protocol.checkpoints.empty()) throw ConfigError("/checkpoints: must not be empty");
  Table1Result result;

  ExperimentConfig rl = with_options(protocol.rl, options);
  rl.n_learning_paths = *std::max_element(protocol.checkpoints.begin(), protocol.checkpoints.end());
  rl.evaluation_paths = 0;
  const ExperimentResult rl_result = run_config(rl);
  maybe_write(rl_result, options, "rl");

  for (int n : protocol.checkpoints) {
    Table1Row row;
    row.n_paths = n;
    std::vector<double> mses;
    for (const ReplicationResult& rep : rl_result.replications)
      mses.push_back(rep.path_mses[static_cast<std::size_t>(n - 1)]);
    row.rl = summarize(mses);

    ExperimentConfig oape = with_options(protocol.oape, options);
    oape.controller.oape_paths = n;
    oape.n_learning_paths = 1;
    oape.evaluation_paths = 0;
    const ExperimentResult oape_result = run_config(oape);
    maybe_write(oape_result, options, "oape_N" + std::to_string(n));
    row.oape = oape_result.summary.mse;
    result.rows.push_back(row);
  }

  if (!options.output_dir.empty()) {
    std::string csv = "n_paths,rl_mean_mse,oape_mean_mse,rl_std_mse,oape_std_mse\n";
    for (const Table1Row& row : result.rows)
      csv += std::to_string(row.n_paths) + "," + format_double(row.rl.mean) + "," +
             format_double(row.oape.mean) + "," + format_double(row.rl.std_dev) + "," +
             format_double(row.oape.std_dev) + "\n";
    write_text(options.output_dir / "table1.csv", csv);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Table 2

Table2Result run_table2(const Table2Protocol& protocol, const ProtocolOptions& options) {
  Table2Result result;
  for (const Table2Case& c : protocol.cases) {
    const ExperimentResult base = run_config(with_options(c.baseline, options));
    const ExperimentResult ctrl = run_config(with_options(c.controlled, options));
    maybe_write(base, options, slug(c.label) + "_baseline");
    maybe_write(ctrl, options, slug(c.label) + "_controlled");

    Table2Row row;
    row.label = c.label;
    row.baseline = base.summary;
    row.controlled = ctrl.summary;
    row.mean_ratio = ctrl.summary.mse.mean / base.summary.mse.mean;
    row.std_ratio = ctrl.summary.mse.std_dev / base.summary.mse.std_dev;
    row.controlled.ratio_vs_baseline = row.mean_ratio;
    std::size_t n = 0;
    std::size_t within = 0;
    for (const ReplicationResult& rep : ctrl.replications)
      for (const auto& series : rep.error_ratios)
        for (double rho : series) {
          ++n;
          within += std::abs(rho) < protocol.error_ratio_threshold;
        }
    row.error_ratio_within = n ? static_cast<double>(within) / static_cast<double>(n) : 0.0;
    result.rows.push_back(row);
  }

  if (!options.output_dir.empty()) {
    std::string csv = "case,control,mean_mse,std_mse,mean_ratio,std_ratio,error_ratio_within\n";
    for (const Table2Row& row : result.rows) {
      csv += row.label + ",none," + format_double(row.baseline.mse.mean) + "," +
             format_double(row.baseline.mse.std_dev) + ",1,1,\n";
      csv += row.label + ",controlled," + format_double(row.controlled.mse.mean) + "," +
             format_double(row.controlled.mse.std_dev) + "," + format_double(row.mean_ratio) +
             "," + format_double(row.std_ratio) + "," + format_double(row.error_ratio_within) +
             "\n";
    }
    write_text(options.output_dir / "table2.csv", csv);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Figure 2

Figure2Result run_figure2(const Figure2Protocol& protocol, const ProtocolOptions& options) {
  Figure2Result result;
  result.comparison = compare_controllers(
      {with_options(protocol.ewma, options), with_options(protocol.rl, options)});

  auto curve = [](const ExperimentResult& r) {
    std::vector<DistributionSummary> out;
    const std::size_t n_paths = r.replications.front().path_costs.size();
    for (std::size_t i = 0; i < n_paths; ++i) {
      std::vector<double> v;
      for (const ReplicationResult& rep : r.replications) v.push_back(rep.path_costs.at(i));
      out.push_back(summarize(v));
    }
    return out;
  };
  result.ewma_curve = curve(result.comparison.results[0]);
  result.rl_curve = curve(result.comparison.results[1]);

  if (!options.output_dir.empty()) {
    write_comparison(result.comparison, options.output_dir);
    std::string csv = "path,ewma_median,ewma_q1,ewma_q3,rl_median,rl_q1,rl_q3\n";
    const std::size_t n = std::max(result.ewma_curve.size(), result.rl_curve.size());
    for (std::size_t i = 0; i < n; ++i) {
      csv += std::to_string(i + 1);
      for (const auto* c : {&result.ewma_curve, &result.rl_curve}) {
        if (i < c->size())
          csv += "," + format_double((*c)[i].median) + "," + format_double((*c)[i].q1) + "," +
                 format_double((*c)[i].q3);
        else
          csv += ",,,";
      }
      csv += "\n";
    }
    write_text(options.output_dir / "learning_curve.csv", csv);
    maybe_write(result.comparison.results[0], options, "ewma");
    maybe_write(result.comparison.results[1], options, "rl");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Figure 5

Figure5Result run_figure5(const Figure5Protocol& protocol, const ProtocolOptions& options) {
  if (protocol.c_grid.empty() || protocol.s_grid.empty())
    throw ConfigError("/c_grid, /s_grid: must not be empty");
  Figure5Result result;
  const ExperimentConfig ghr = with_options(protocol.ghr, options);

  bool have = false;
  for (double c : protocol.c_grid) {
    for (double s : protocol.s_grid) {
      ExperimentConfig cfg = ghr;
      cfg.controller.ghr_c = c;
      cfg.controller.ghr_s = s;
      cfg.replications = protocol.tuning_replications;
      cfg.master_seed = derive_seed(ghr.master_seed, tag_hash("ghr-tuning"));
      const ExperimentResult r = run_config(cfg);
      GhrTuningPoint point{c, s, r.summary.cost.mean};
      result.tuning.push_back(point);
      if (!have || point.mean_cost < result.selected.mean_cost) {
        result.selected = point;
        have = true;
      }
    }
  }

  ExperimentConfig tuned = ghr;
  tuned.controller.ghr_c = result.selected.c;
  tuned.controller.ghr_s = result.selected.s;
  result.comparison = compare_controllers({tuned, with_options(protocol.pgs, options)});

  if (!options.output_dir.empty()) {
    std::string csv = "c,s,mean_cost\n";
    for (const GhrTuningPoint& p : result.tuning)
      csv += format_double(p.c) + "," + format_double(p.s) + "," + format_double(p.mean_cost) + "\n";
    write_text(options.output_dir / "ghr_tuning.csv", csv);
    write_comparison(result.comparison, options.output_dir);
    maybe_write(result.comparison.results[0], options, "ghr");
    maybe_write(result.comparison.results[1], options, "pgs");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Quadratic CMP

QuadraticResult run_quadratic(const QuadraticProtocol& protocol, const ProtocolOptions& options) {
  const ExperimentResult r = run_config(with_options(protocol.rl, options));
  maybe_write(r, options, "rl");
  QuadraticResult result;
  result.summary = r.summary;
  const std::size_t m = r.replications.front().error_ratios.size();
  if (protocol.thresholds.size() != m)
    throw ConfigError("/thresholds: need one threshold per output");
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<double> abs_rho;
    std::size_t within = 0;
    for (const ReplicationResult& rep : r.replications)
      for (double rho : rep.error_ratios[c]) {
        abs_rho.push_back(std::abs(rho));
        within += std::abs(rho) < protocol.thresholds[c];
      }
    result.fraction_within.push_back(static_cast<double>(within) /
                                     static_cast<double>(abs_rho.size()));
    result.abs_error_ratio.push_back(summarize(abs_rho));
  }
  if (!options.output_dir.empty()) {
    std::string csv = "output,threshold,fraction_within,median_abs_rho,q3_abs_rho,max_abs_rho\n";
    for (std::size_t c = 0; c < m; ++c)
      csv += std::to_string(c + 1) + "," + format_double(protocol.thresholds[c]) + "," +
             format_double(result.fraction_within[c]) + "," +
             format_double(result.abs_error_ratio[c].median) + "," +
             format_double(result.abs_error_ratio[c].q3) + "," +
             format_double(result.abs_error_ratio[c].max) + "\n";
    write_text(options.output_dir / "error_ratios.csv", csv);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Theory checks

namespace {

/// Delta-method spread of the ratio around mu1 / mu2.
double ratio_scale(const RatioMoments& m) {
  const double c = m.mu1 / m.mu2;
  const double g = c * c * m.sigma2 * m.sigma2 - 2.0 * c * m.sigma12 + m.sigma1 * m.sigma1;
  return std::max(std::sqrt(std::max(g, 0.0)) / std::abs(m.mu2), 1e-6);
}

}  // namespace

double ratio_pdf_integral(const RatioDistribution& dist) {
  constexpr double kLimit = 1e4;
  const RatioMoments& m = dist.moments();
  const double c = std::clamp(m.mu1 / m.mu2, -kLimit, kLimit);
  const double w = ratio_scale(m);
  std::vector<double> cuts{-kLimit, kLimit, c};
  if (std::abs(c) < kLimit) cuts.push_back(0.0);
  for (double step = w; step < 2.0 * kLimit; step *= 2.0) {
    if (c - step > -kLimit) cuts.push_back(c - step);
    if (c + step < kLimit) cuts.push_back(c + step);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto f = [&](double u) { return dist.pdf(u); };
  using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += gk::integrate(f, cuts[i], cuts[i + 1], 15, 1e-12);
  const double inf = std::numeric_limits<double>::infinity();
  total += gk::integrate(f, -inf, -kLimit, 15, 1e-12);
  total += gk::integrate(f, kLimit, inf, 15, 1e-12);
  return total;
}

double ratio_ks_distance(const RatioDistribution& dist, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("ratio_ks_distance: n must be >= 1");
  std::vector<double> x(static_cast<std::size_t>(n));
  CounterRng rng(seed);
  for (double& v : x) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    v = dist.sample(z1, z2);
  }
  std::sort(x.begin(), x.end());
  std::vector<double> gap(x.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double F = dist.cdf(x[static_cast<std::size_t>(i)]);
    gap[static_cast<std::size_t>(i)] =
        std::max(static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n);
  }
  return *std::max_element(gap.begin(), gap.end());
}

double ratio_approx_max_gap(const RatioDistribution& dist, int n) {
  if (n < 2) throw std::invalid_argument("ratio_approx_max_gap: need >= 2 points");
  const RatioMoments& m = dist.moments();
  const double c = m.mu1 / m.mu2;
  const double w = ratio_scale(m);
  // Widen until the exact CDF covers all but 1e-6 of the mass.
  double half = 5.0 * w;
  for (int k = 0; k < 60 && (dist.cdf(c - half) > 5e-7 || dist.cdf(c + half) < 1.0 - 5e-7); ++k)
    half *= 1.5;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = c - half + 2.0 * half * i / (n - 1);
    worst = std::max(worst, std::abs(dist.cdf(u) - dist.cdf_normal_approx(u)));
  }
  return worst;
}

std::vector<RatioMoments> random_ratio_moments(int count, double min_snr, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<RatioMoments> out;
  for (int i = 0; i < count; ++i) {
    const double s1 = 0.3 + 2.7 * rng.uniform();
    const double s2 = 0.2 + 1.8 * rng.uniform();
    const double snr = min_snr + 5.0 * rng.uniform();
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double mu1 = -5.0 + 10.0 * rng.uniform();
    const double rho = -0.9 + 1.8 * rng.uniform();
    out.push_back(make_ratio_moments(mu1, sign * snr * s2, s1 * s1, s2 * s2, rho * s1 * s2));
  }
  return out;
}

std::vector<VarianceLawRow> arima_variance_law(const ArimaProcessParams& params,
                                               const std::vector<int>& times, int n_paths,
                                               std::uint64_t seed) {
  if (times.empty() || n_paths < 2) throw std::invalid_argument("arima_variance_law: bad sizes");
  ArimaProcessParams p = params;
  p.T = *std::max_element(times.begin(), times.end());
  const std::size_t k = times.size();
  std::vector<double> values(static_cast<std::size_t>(n_paths) * k);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_paths; ++i) {
    const std::vector<double> d =
        arima_disturbance_stream(p, derive_seed(seed, static_cast<std::uint64_t>(i)));
    for (std::size_t j = 0; j < k; ++j)
      values[static_cast<std::size_t>(i) * k + j] = d[static_cast<std::size_t>(times[j] - 1)];
  }
  std::vector<VarianceLawRow> rows;
  for (std::size_t j = 0; j < k; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n_paths; ++i) mean += values[static_cast<std::size_t>(i) * k + j];
    mean /= n_paths;
    double m2 = 0.0;
    double m4 = 0.0;
    for (int i = 0; i < n_paths; ++i) {
      const double e = values[static_cast<std::size_t>(i) * k + j] - mean;
      m2 += e * e;
      m4 += e * e * e * e;
    }
    m4 /= n_paths;
    const double var = m2 / (n_paths - 1);
    VarianceLawRow row;
    row.t = times[j];
    row.simulated = var;
    row.simulated_se = std::sqrt(std::max(m4 - var * var, 0.0) / n_paths);
    row.increment_sum = arima_increment_variance_sum(p.phi, p.theta, p.sigma, row.t);
    row.exact = arima_output_variance_exact(p.phi, p.theta, p.sigma, row.t);
    rows.push_back(row);
  }
  return rows;
}

TheoryCheckResult run_theory_check(const TheoryCheckProtocol& protocol,
                                   const ProtocolOptions& options) {
  const std::uint64_t seed = options.seed.value_or(protocol.seed);
  TheoryCheckResult result;

  const auto battery = theorem2_battery();
  for (std::size_t i = 0; i < battery.size(); ++i) {
    auto reports = theorem2_bound_check(battery[i], protocol.etas, protocol.bound_trials,
                                        derive_seed(seed, tag_hash("theorem2"), i));
    result.bounds.insert(result.bounds.end(), reports.begin(), reports.end());
  }

  const auto process = make_process(protocol.rate_process);
  const auto model =
      make_approximate_model(ApproxFamily::linear, process->control_dim(), protocol.rate_include_time);
  result.rate = theorem1_rate_check(
      *process, *model, linear_cmp_true_theta(protocol.rate_process, protocol.rate_include_time),
      protocol.rate_n_grid, protocol.rate_replications, protocol.rate_action_std,
      derive_seed(seed, tag_hash("theorem1")));

  for (const RatioMoments& m :
       random_ratio_moments(protocol.pdf_moment_sets, 1.0, derive_seed(seed, tag_hash("pdf"))))
    result.pdf_integrals.push_back({m, ratio_pdf_integral(RatioDistribution(m))});

  const auto ks_sets =
      random_ratio_moments(protocol.ks_moment_sets, 1.0, derive_seed(seed, tag_hash("ks-moments")));
  for (std::size_t i = 0; i < ks_sets.size(); ++i)
    result.ks.push_back({ks_sets[i], protocol.ks_draws,
                         ratio_ks_distance(RatioDistribution(ks_sets[i]), protocol.ks_draws,
                                           derive_seed(seed, tag_hash("ks-draws"), i))});

  for (double snr : protocol.approx_snr) {
    const RatioMoments m = make_ratio_moments(1.0, snr, 1.0, 1.0, 0.3);
    const RatioDistribution dist(m);
    result.approx.push_back(
        {snr, m, ratio_approx_max_gap(dist, protocol.approx_grid_points), dist.approx_error_bound()});
  }

  result.variance_law = arima_variance_law(protocol.arima, protocol.variance_times,
                                           protocol.variance_paths,
                                           derive_seed(seed, tag_hash("arima-variance")));

  if (!options.output_dir.empty()) {
    std::string csv = "label,eta,bound_action,empirical_action,bound_output,empirical_output\n";
    for (const BoundReport& b : result.bounds)
      csv += b.label + "," + format_double(b.eta) + "," + format_double(b.bound_action) + "," +
             format_double(b.empirical_freq_action) + "," + format_double(b.bound_output) + "," +
             format_double(b.empirical_freq_output) + "\n";
    write_text(options.output_dir / "theorem2_bounds.csv", csv);

    csv = "coordinate,n,variance,bias,bias_half_width\n";
    for (std::size_t c = 0; c < result.rate.coordinate_names.size(); ++c)
      for (std::size_t g = 0; g < result.rate.n_grid.size(); ++g)
        csv += result.rate.coordinate_names[c] + "," + std::to_string(result.rate.n_grid[g]) + "," +
               format_double(result.rate.variance[c][g]) + "," +
               format_double(result.rate.bias[c][g]) + "," +
               format_double(result.rate.bias_half_width[c][g]) + "\n";
    write_text(options.output_dir / "theorem1_rate.csv", csv);

    // Grid evaluations of F and F* for plotting.
    csv = "snr,u,pdf,cdf,cdf_normal_approx\n";
    for (const ApproxGapCheck& a : result.approx) {
      const RatioDistribution dist(a.moments);
      const double c = a.moments.mu1 / a.moments.mu2;
      const double w = 6.0 * ratio_scale(a.moments);
      for (int i = 0; i <= 200; ++i) {
        const double u = c - w + 2.0 * w * i / 200.0;
        csv += format_double(a.snr) + "," + format_double(u) + "," + format_double(dist.pdf(u)) +
               "," + format_double(dist.cdf(u)) + "," + format_double(dist.cdf_normal_approx(u)) +
               "\n";
      }
    }
    write_text(options.output_dir / "ratio_grid.csv", csv);

    csv = "t,simulated,simulated_se,increment_sum,exact\n";
    for (const VarianceLawRow& v : result.variance_law)
      csv += std::to_string(v.t) + "," + format_double(v.simulated) + "," +
             format_double(v.simulated_se) + "," + format_double(v.increment_sum) + "," +
             format_double(v.exact) + "\n";
    write_text(options.output_dir / "arima_variance.csv", csv);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Documents

Json load_protocol_document(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides) {
  Json doc = load_json_file(path);
  if (doc.is_object() && doc.contains("protocol"))
    inline_references(doc, path.parent_path());
  apply_overrides(doc, overrides);
  return doc;
}

Table1Protocol table1_from_json(const Json& doc) {
  Reader r = protocol_reader(doc, "table1");
  Table1Protocol p;
  p.rl = experiment_at(r, doc, "rl");
  p.oape = experiment_at(r, doc, "oape");
  p.checkpoints = int_list(r, "checkpoints", p.checkpoints);
  r.finish();
  if (p.rl.controller.kind != ControllerKind::rl_alg1) r.fail("rl", "expected an rl_alg1 controller");
  if (p.oape.controller.kind != ControllerKind::oape) r.fail("oape", "expected an oape controller");
  return p;
}

Table2Protocol table2_from_json(const Json& doc) {
  Reader r = protocol_reader(doc, "table2");
  Table2Protocol p;
  p.error_ratio_threshold = r.number("error_ratio_threshold", p.error_ratio_threshold);
  const Json& cases = r.raw("cases");
  if (!cases.is_array() || cases.empty()) r.fail("cases", "expected a non-empty array");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Reader c(cases[i], r.path("cases") + "/" + std::to_string(i));
    Table2Case tc;
    tc.label = c.string("label");
    tc.baseline = experiment_at(c, doc, "baseline");
    tc.controlled = experiment_at(c, doc, "controlled");
    c.finish();
    p.cases.push_back(std::move(tc));
  }
  r.finish();
  return p;
}

Figure2Protocol figure2_from_json(const Json& doc) {
  Reader r = protocol_reader(doc, "figure2");
  Figure2Protocol p;
  p.ewma = experiment_at(r, doc, "ewma");
  p.rl = experiment_at(r, doc, "rl");
  if (doc.contains("n_learning_paths")) {
    const int n = r.integer("n_learning_paths");
    if (n < 1) r.fail("n_learning_paths", "must be >= 1");
    p.ewma.n_learning_paths = p.rl.n_learning_paths = n;
  }
  r.ignore("n_learning_paths");
  r.finish();
  return p;
}

Figure5Protocol figure5_from_json(const Json& doc) {
  Reader r = protocol_reader(doc, "figure5");
  Figure5Protocol p;
  p.ghr = experiment_at(r, doc, "ghr");
  p.pgs = experiment_at(r, doc, "pgs");
  p.c_grid = double_list(r, "c_grid", p.c_grid);
  p.s_grid = double_list(r, "s_grid", p.s_grid);
  p.tuning_replications = r.integer("tuning_replications", p.tuning_replications);
  if (p.tuning_replications < 1) r.fail("tuning_replications", "must be >= 1");
  r.finish();
  if (p.ghr.controller.kind != ControllerKind::ghr) r.fail("ghr", "expected a ghr controller");
  if (p.pgs.controller.kind != ControllerKind::rl_pgs) r.fail("pgs", "expected an rl_pgs controller");
  return p;
}

QuadraticProtocol quadratic_from_json(const Json& doc) {
  Reader r = protocol_reader(doc, "quadratic");
  QuadraticProtocol p;
  p.rl = experiment_at(r, doc, "rl");
  p.thresholds = double_list(r, "thresholds", p.thresholds);
  r.finish();
  return p;
}

TheoryCheckProtocol theory_check_from_json(const Json& doc) {
  Reader r(doc, "");
  if (r.string("protocol") != "theory-check") r.fail("protocol", "expected \"theory-check\"");
  r.string("name", "theory-check");
  r.ignore("output_dir");
  TheoryCheckProtocol p;
  p.seed = r.unsigned_integer("master_seed", p.seed);
  p.etas = double_list(r, "etas", p.etas);
  p.bound_trials = r.integer("bound_trials", p.bound_trials);

  const ProcessParams rate = process_from_json(r.object("rate_process"), r.path("rate_process"));
  if (!std::holds_alternative<LinearCmpParams>(rate))
    r.fail("rate_process", "expected a linear_cmp process");
  p.rate_process = std::get<LinearCmpParams>(rate);
  p.rate_include_time = r.boolean("rate_include_time", p.rate_include_time);
  p.rate_n_grid = int_list(r, "rate_n_grid", p.rate_n_grid);
  p.rate_replications = r.integer("rate_replications", p.rate_replications);
  p.rate_action_std = r.number("rate_action_std", p.rate_action_std);

  p.pdf_moment_sets = r.integer("pdf_moment_sets", p.pdf_moment_sets);
  p.ks_moment_sets = r.integer("ks_moment_sets", p.ks_moment_sets);
  p.ks_draws = r.integer("ks_draws", p.ks_draws);
  p.approx_snr = double_list(r, "approx_snr", p.approx_snr);
  p.approx_grid_points = r.integer("approx_grid_points", p.approx_grid_points);

  const ProcessParams arima = process_from_json(r.object("arima"), r.path("arima"));
  if (!std::holds_alternative<ArimaProcessParams>(arima))
    r.fail("arima", "expected an arima process");
  p.arima = std::get<ArimaProcessParams>(arima);
  p.variance_times = int_list(r, "variance_times", p.variance_times);
  p.variance_paths = r.integer("variance_paths", p.variance_paths);
  r.finish();

  if (p.bound_trials < 1) r.fail("bound_trials", "must be >= 1");
  if (p.rate_replications < 2) r.fail("rate_replications", "must be >= 2");
  if (p.ks_draws < 1) r.fail("ks_draws", "must be >= 1");
  if (p.approx_grid_points < 2) r.fail("approx_grid_points", "must be >= 2");
  if (p.variance_paths < 2) r.fail("variance_paths", "must be >= 2");
  return p;
}

// ---------------------------------------------------------------------------
// Reports

Json to_json(const RatioMoments& m) {
  return {{"mu1", m.mu1},       {"mu2", m.mu2},         {"sigma1", m.sigma1},
          {"sigma2", m.sigma2}, {"sigma12", m.sigma12}, {"rho", m.rho}};
}

Json to_json(const BoundReport& b) {
  return {{"label", b.label},
          {"eta", b.eta},
          {"bound_action", b.bound_action},
          {"bound_output", b.bound_output},
          {"empirical_freq_action", b.empirical_freq_action},
          {"empirical_freq_output", b.empirical_freq_output},
          {"n_trials", b.n_trials},
          {"u_star", b.u_star},
          {"weighted_mean", b.weighted_mean},
          {"action_vacuous", b.action_vacuous},
          {"output_vacuous", b.output_vacuous},
          {"action_ok", b.action_ok},
          {"output_ok", b.output_ok},
          {"moments", to_json(b.moments)}};
}

Json to_json(const RateReport& r) {
  Json coords = Json::array();
  for (std::size_t c = 0; c < r.coordinate_names.size(); ++c)
    coords.push_back({{"name", r.coordinate_names[c]},
                      {"slope", r.slope[c]},
                      {"slope_se", r.slope_se[c]},
                      {"variance", r.variance[c]},
                      {"bias", r.bias[c]},
                      {"bias_half_width", r.bias_half_width[c]}});
  return {{"n_grid", r.n_grid},
          {"replications", r.replications},
          {"ci_level", r.ci_level},
          {"bias_covers_zero", r.bias_covers_zero()},
          {"coordinates", coords}};
}

Json to_json(const Table1Result& r) {
  Json rows = Json::array();
  for (const Table1Row& row : r.rows)
    rows.push_back({{"n_paths", row.n_paths},
                    {"rl_mean_mse", row.rl.mean},
                    {"rl_std_mse", row.rl.std_dev},
                    {"oape_mean_mse", row.oape.mean},
                    {"oape_std_mse", row.oape.std_dev},
                    {"rl", summary_json(row.rl)},
                    {"oape", summary_json(row.oape)}});
  return {{"rows", rows}};
}

Json to_json(const Table2Result& r) {
  Json rows = Json::array();
  for (const Table2Row& row : r.rows)
    rows.push_back({{"label", row.label},
                    {"baseline", to_json(row.baseline)},
                    {"controlled", to_json(row.controlled)},
                    {"mean_ratio", row.mean_ratio},
                    {"std_ratio", row.std_ratio},
                    {"error_ratio_within", row.error_ratio_within}});
  return {{"rows", rows}};
}

namespace {

Json comparison_json(const ComparisonReport& c) {
  Json j = Json::array();
  for (std::size_t i = 0; i < c.names.size(); ++i)
    j.push_back({{"name", c.names[i]}, {"total_cost", summary_json(c.cost_summaries[i])}});
  return j;
}

Json curve_json(const std::vector<DistributionSummary>& curve) {
  Json j = Json::array();
  for (const DistributionSummary& s : curve) j.push_back(s.median);
  return j;
}

}  // namespace

Json to_json(const Figure2Result& r) {
  return {{"controllers", comparison_json(r.comparison)},
          {"iqr_overlap", r.comparison.iqr_overlap(0, 1)},
          {"ewma_median_cost_by_path", curve_json(r.ewma_curve)},
          {"rl_median_cost_by_path", curve_json(r.rl_curve)}};
}

Json to_json(const Figure5Result& r) {
  Json tuning = Json::array();
  for (const GhrTuningPoint& p : r.tuning)
    tuning.push_back({{"c", p.c}, {"s", p.s}, {"mean_cost", p.mean_cost}});
  return {{"ghr_selected", {{"c", r.selected.c}, {"s", r.selected.s}, {"mean_cost", r.selected.mean_cost}}},
          {"ghr_tuning", tuning},
          {"controllers", comparison_json(r.comparison)},
          {"iqr_overlap", r.comparison.iqr_overlap(0, 1)},
          {"median_ratio_pgs_over_ghr",
           r.comparison.cost_summaries[1].median / r.comparison.cost_summaries[0].median}};
}

Json to_json(const QuadraticResult& r) {
  Json outs = Json::array();
  for (std::size_t c = 0; c < r.fraction_within.size(); ++c)
    outs.push_back({{"output", c + 1},
                    {"fraction_within", r.fraction_within[c]},
                    {"abs_error_ratio", summary_json(r.abs_error_ratio[c])}});
  return {{"outputs", outs}, {"summary", to_json(r.summary)}};
}

Json to_json(const TheoryCheckResult& r) {
  Json bounds = Json::array();
  for (const BoundReport& b : r.bounds) bounds.push_back(to_json(b));
  Json pdf = Json::array();
  for (const PdfIntegralCheck& c : r.pdf_integrals)
    pdf.push_back({{"moments", to_json(c.moments)}, {"integral", c.integral}});
  Json ks = Json::array();
  for (const KsCheck& c : r.ks)
    ks.push_back({{"moments", to_json(c.moments)}, {"draws", c.draws}, {"distance", c.distance}});
  Json approx = Json::array();
  for (const ApproxGapCheck& a : r.approx)
    approx.push_back({{"snr", a.snr}, {"max_gap", a.max_gap}, {"bound", a.bound}});
  Json var = Json::array();
  for (const VarianceLawRow& v : r.variance_law)
    var.push_back({{"t", v.t},
                   {"simulated", v.simulated},
                   {"simulated_se", v.simulated_se},
                   {"increment_sum", v.increment_sum},
                   {"exact", v.exact}});
  return {{"theorem2", bounds},
          {"theorem1", to_json(r.rate)},
          {"pdf_integrals", pdf},
          {"ks", ks},
          {"normal_approximation", approx},
          {"arima_variance", var}};
}

Json run_protocol(const Json& doc, const ProtocolOptions& options_in) {
  ProtocolOptions options = options_in;
  if (options.output_dir.empty() && doc.is_object() && doc.contains("output_dir") &&
      doc["output_dir"].is_string())
    options.output_dir = doc["output_dir"].get<std::string>();

  if (!doc.is_object() || !doc.contains("protocol")) {
    ExperimentConfig cfg = experiment_from_json(doc);
    if (options.seed) cfg.master_seed = *options.seed;
    if (options.threads) cfg.threads = options.threads;
    cfg.output_dir = options.output_dir.string();
    const ExperimentResult result = run_experiment(cfg);
    return {{"experiment", cfg.name},
            {"master_seed", cfg.master_seed},
            {"replications", cfg.replications},
            {"summary", to_json(result.summary)}};
  }

  const std::string name = rethrow_at("/protocol", [&] {
    if (!doc["protocol"].is_string()) throw ConfigError("expected a string");
    return doc["protocol"].get<std::string>();
  });
  Json report;
  if (name == "table1")
    report = to_json(run_table1(table1_from_json(doc), options));
  else if (name == "table2")
    report = to_json(run_table2(table2_from_json(doc), options));
  else if (name == "figure2")
    report = to_json(run_figure2(figure2_from_json(doc), options));
  else if (name == "figure5")
    report = to_json(run_figure5(figure5_from_json(doc), options));
  else if (name == "quadratic")
    report = to_json(run_quadratic(quadratic_from_json(doc), options));
  else if (name == "theory-check")
    report = to_json(run_theory_check(theory_check_from_json(doc), options));
  else
    throw ConfigError("/protocol: unknown protocol \"" + name + "\"");

  // Null when each experiment keeps its own seed.
  Json seed = nullptr;
  if (doc.contains("master_seed")) seed = doc["master_seed"];
  if (options.seed) seed = *options.seed;
  Json out = {{"schema_version", 1},
              {"protocol", name},
              {"name", doc.value("name", name)},
              {"master_seed", seed},
              {"seed_override", options.seed.has_value()},
              {"report", report}};
  if (!options.output_dir.empty())
    write_text(options.output_dir / "summary.json", out.dump(2) + "\n");
  return out;
}

}  // namespace r2r

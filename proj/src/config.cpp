#include "r2r/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json_reader.hpp"
#include "r2r/errors.hpp"

namespace r2r {

using detail::Reader;
using detail::rethrow_at;

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::null: return "null";
    case ControllerKind::oracle: return "oracle";
    case ControllerKind::ewma: return "ewma";
    case ControllerKind::ghr: return "ghr";
    case ControllerKind::rl_alg1: return "rl_alg1";
    case ControllerKind::oape: return "oape";
    case ControllerKind::rl_pgs: return "rl_pgs";
  }
  return "unknown";
}

ControllerKind controller_kind_from_string(const std::string& name) {
  for (ControllerKind k : {ControllerKind::null, ControllerKind::oracle, ControllerKind::ewma,
                           ControllerKind::ghr, ControllerKind::rl_alg1, ControllerKind::oape,
                           ControllerKind::rl_pgs})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown controller kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Parsing

Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << col << ": JSON syntax error: " << e.what();
    throw ConfigError(msg.str());
  }
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json_text(buffer.str(), path.string());
}

void apply_overrides(Json& doc, const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + item + "' is not of the form key=value");
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    Json value;
    try {
      value = Json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
      value = raw;
    }
    std::string pointer;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) pointer += "/" + part;
    doc[Json::json_pointer(pointer)] = value;
  }
}


ProcessParams process_from_json(const Json& j, const std::string& where) {
  Reader r(j, where);
  const std::string family = r.string("family");
  ProcessParams out;
  switch (rethrow_at(r.path("family"), [&] { return process_family_from_string(family); })) {
    case ProcessFamily::linear_cmp: {
      LinearCmpParams p;
      p.A = r.vector("A");
      p.B = r.matrix("B");
      p.delta = r.vector("delta");
      p.Lambda = r.matrix("Lambda");
      p.T = r.integer("T", 30);
      p.y0 = r.vector("y0", Vector());
      out = p;
      break;
    }
    case ProcessFamily::arima: {
      ArimaProcessParams p;
      p.a = r.number("a");
      p.b = r.number("b");
      p.phi = r.number("phi");
      p.theta = r.number("theta");
      p.sigma = r.number("sigma", 1.0);
      p.T = r.integer("T", 80);
      p.y0 = r.number("y0", 0.0);
      out = p;
      break;
    }
    case ProcessFamily::quadratic_cmp: {
      QuadraticCmpParams p;
      p.coeffs1 = r.fixed<10>("coeffs1");
      p.coeffs2 = r.fixed<10>("coeffs2");
      p.drift1 = r.number("drift1", 0.0);
      p.drift2 = r.number("drift2", 0.0);
      p.noise1 = r.number("noise1");
      p.noise2 = r.number("noise2");
      p.T = r.integer("T", 30);
      if (r.has("y0")) p.y0 = r.fixed<2>("y0");
      r.ignore("y0");
      out = p;
      break;
    }
    case ProcessFamily::wiener: {
      WienerParams p;
      p.y0 = r.number("y0", 0.0);
      p.v = r.number("v");
      p.sigma = r.number("sigma");
      p.T = r.integer("T", 80);
      p.control_gain = r.number("control_gain", -1.0);
      out = p;
      break;
    }
    case ProcessFamily::gamma: {
      GammaParams p;
      p.alpha = r.number("alpha");
      p.beta = r.number("beta");
      p.beta_is_rate = r.boolean("gamma_beta_is_rate", true);
      p.y0 = r.number("y0", 0.0);
      p.T = r.integer("T", 80);
      p.control_gain = r.number("control_gain", -1.0);
      out = p;
      break;
    }
  }
  r.finish();
  rethrow_at(where, [&] {
    std::visit([](const auto& p) { validate(p); }, out);
    return 0;
  });
  return out;
}

ControllerSpec controller_from_json(const Json& j, const std::string& where) {
  Reader r(j, where);
  ControllerSpec s;
  s.kind = rethrow_at(r.path("kind"), [&] { return controller_kind_from_string(r.string("kind")); });
  const bool pgs = s.kind == ControllerKind::rl_pgs;

  s.u_null = r.vector("u_null", Vector());
  s.ewma_lambda = r.number("lambda_ewma", s.ewma_lambda);
  s.ewma_a_init = r.vector("ewma_a_init", Vector());

  if (r.has("ghr")) {
    Reader g(r.object("ghr"), r.path("ghr"));
    s.ghr_c = g.number("c", s.ghr_c);
    s.ghr_s = g.number("s", s.ghr_s);
    if (g.has("a_init")) s.ghr_a_init = g.number("a_init");
    g.ignore("a_init");
    g.finish();
  }
  r.ignore("ghr");

  // Keys shared by both learning controllers land in the one that is selected.
  if (r.has("epsilon")) s.alg1.epsilon = r.number("epsilon");
  if (r.has("eta")) (pgs ? s.pgs.eta : s.alg1.eta) = r.number("eta");
  if (r.has("max_inner_iters"))
    (pgs ? s.pgs.max_inner_iters : s.alg1.max_inner_iters) = r.integer("max_inner_iters");
  if (r.has("u_init")) {
    const Vector u = r.vector("u_init");
    if (pgs) {
      if (u.size() != 1) r.fail("u_init", "rl_pgs expects a scalar u_init");
      s.pgs.u_init = u[0];
    } else {
      s.alg1.u_init = u;
    }
  }
  for (const char* k : {"epsilon", "eta", "max_inner_iters", "u_init"}) r.ignore(k);

  s.alg1.family = rethrow_at(r.path("approx_model"), [&] {
    return approx_family_from_string(r.string("approx_model", "linear"));
  });
  s.alg1.include_time = r.boolean("include_time", s.alg1.include_time);
  s.alg1.pooled = r.boolean("pooled", s.alg1.pooled);
  s.alg1.explore_std = r.number("explore_std", s.alg1.explore_std);
  s.alg1.search.stencil_step = r.number("stencil_step", s.alg1.search.stencil_step);
  if (r.has("action_box")) {
    const Vector box = r.vector("action_box");
    if (box.size() != 2 || !(box[0] < box[1]))
      r.fail("action_box", "expected [lower, upper] with lower < upper");
    s.alg1.box = {box[0], box[1]};
  }
  r.ignore("action_box");

  if (r.has("oape")) {
    Reader o(r.object("oape"), r.path("oape"));
    s.oape_paths = o.integer("paths", s.oape_paths);
    s.oape_action_std = o.number("action_std", s.oape_action_std);
    s.oape_action_center = o.vector("action_center", Vector());
    o.finish();
    if (s.oape_paths < 1) o.fail("paths", "must be >= 1");
  }
  r.ignore("oape");

  s.pgs.alpha = r.number("alpha_step", s.pgs.alpha);
  if (r.has("pgs")) {
    Reader p(r.object("pgs"), r.path("pgs"));
    s.pgs.u_guard = p.number("u_guard", s.pgs.u_guard);
    s.pgs.max_halvings = p.integer("max_halvings", s.pgs.max_halvings);
    s.pgs.refit_each_path = p.boolean("refit_each_path", s.pgs.refit_each_path);
    s.pgs.fit_drift = p.boolean("fit_drift", s.pgs.fit_drift);
    s.pgs_offline_paths = p.integer("offline_paths", s.pgs_offline_paths);
    s.pgs_offline_action_std = p.number("offline_action_std", s.pgs_offline_action_std);
    s.pgs_variance_form = rethrow_at(p.path("variance_form"), [&] {
      return variance_form_from_string(p.string("variance_form", "time_linear"));
    });
    p.finish();
    if (s.pgs_offline_paths < 2) p.fail("offline_paths", "must be >= 2");
  }
  r.ignore("pgs");
  r.finish();

  if (!(s.ewma_lambda >= 0.0 && s.ewma_lambda <= 1.0)) r.fail("lambda_ewma", "must lie in [0, 1]");
  if (!(s.alg1.epsilon > 0.0)) r.fail("epsilon", "must be > 0");
  if (!(s.alg1.eta > 0.0) || !(s.pgs.eta > 0.0)) r.fail("eta", "must be > 0");
  if (s.alg1.max_inner_iters < 1 || s.pgs.max_inner_iters < 1)
    r.fail("max_inner_iters", "must be >= 1");
  if (!(s.pgs.alpha > 0.0)) r.fail("alpha_step", "must be > 0");
  if (!(s.alg1.explore_std >= 0.0)) r.fail("explore_std", "must be >= 0");
  return s;
}

ExperimentConfig experiment_from_json(const Json& j, const std::string& where) {
  Reader r(j, where);
  ExperimentConfig c;
  c.name = r.string("name", c.name);
  c.process = process_from_json(r.object("process"), r.path("process"));
  c.controller = controller_from_json(r.object("controller"), r.path("controller"));
  c.n_learning_paths = r.integer("n_learning_paths", c.n_learning_paths);
  c.evaluation_paths = r.integer("evaluation_paths", c.evaluation_paths);
  c.replications = r.integer("replications", c.replications);
  c.master_seed = r.unsigned_integer("master_seed", c.master_seed);
  c.y_star = r.vector("y_star");
  c.output_dir = r.string("output_dir", "");
  c.threads = r.integer("threads", 0);
  r.finish();
  if (c.n_learning_paths < 1) r.fail("n_learning_paths", "must be >= 1");
  if (c.evaluation_paths < 0) r.fail("evaluation_paths", "must be >= 0");
  if (c.replications < 1) r.fail("replications", "must be >= 1");
  if (c.threads < 0) r.fail("threads", "must be >= 0");
  rethrow_at(where.empty() ? "/" : where, [&] {
    validate(c);
    return 0;
  });
  return c;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json mat_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

}  // namespace

Json to_json(const ProcessParams& params) {
  return std::visit(
      [](const auto& p) -> Json {
        using P = std::decay_t<decltype(p)>;
        Json j;
        if constexpr (std::is_same_v<P, LinearCmpParams>) {
          j["family"] = "linear_cmp";
          j["A"] = vec_json(p.A);
          j["B"] = mat_json(p.B);
          j["delta"] = vec_json(p.delta);
          j["Lambda"] = mat_json(p.Lambda);
          j["T"] = p.T;
          if (p.y0.size()) j["y0"] = vec_json(p.y0);
        } else if constexpr (std::is_same_v<P, ArimaProcessParams>) {
          j = {{"family", "arima"}, {"a", p.a},         {"b", p.b}, {"phi", p.phi},
               {"theta", p.theta},  {"sigma", p.sigma}, {"T", p.T}, {"y0", p.y0}};
        } else if constexpr (std::is_same_v<P, QuadraticCmpParams>) {
          j["family"] = "quadratic_cmp";
          j["coeffs1"] = p.coeffs1;
          j["coeffs2"] = p.coeffs2;
          j["drift1"] = p.drift1;
          j["drift2"] = p.drift2;
          j["noise1"] = p.noise1;
          j["noise2"] = p.noise2;
          j["T"] = p.T;
          j["y0"] = p.y0;
        } else if constexpr (std::is_same_v<P, WienerParams>) {
          j = {{"family", "wiener"}, {"y0", p.y0}, {"v", p.v}, {"sigma", p.sigma},
               {"T", p.T},           {"control_gain", p.control_gain}};
        } else {
          j = {{"family", "gamma"},
               {"alpha", p.alpha},
               {"beta", p.beta},
               {"gamma_beta_is_rate", p.beta_is_rate},
               {"y0", p.y0},
               {"T", p.T},
               {"control_gain", p.control_gain}};
        }
        return j;
      },
      params);
}

Json to_json(const ControllerSpec& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  switch (s.kind) {
    case ControllerKind::null:
      if (s.u_null.size()) j["u_null"] = vec_json(s.u_null);
      break;
    case ControllerKind::oracle:
      break;
    case ControllerKind::ewma:
      j["lambda_ewma"] = s.ewma_lambda;
      if (s.ewma_a_init.size()) j["ewma_a_init"] = vec_json(s.ewma_a_init);
      break;
    case ControllerKind::ghr:
      j["ghr"] = {{"c", s.ghr_c}, {"s", s.ghr_s}};
      if (s.ghr_a_init) j["ghr"]["a_init"] = *s.ghr_a_init;
      break;
    case ControllerKind::rl_alg1:
    case ControllerKind::oape:
      j["approx_model"] = to_string(s.alg1.family);
      j["include_time"] = s.alg1.include_time;
      j["pooled"] = s.alg1.pooled;
      j["epsilon"] = s.alg1.epsilon;
      j["eta"] = s.alg1.eta;
      j["max_inner_iters"] = s.alg1.max_inner_iters;
      if (s.alg1.u_init.size()) j["u_init"] = vec_json(s.alg1.u_init);
      j["explore_std"] = s.alg1.explore_std;
      j["action_box"] = {s.alg1.box.lower, s.alg1.box.upper};
      j["stencil_step"] = s.alg1.search.stencil_step;
      if (s.kind == ControllerKind::oape) {
        j["oape"] = {{"paths", s.oape_paths}, {"action_std", s.oape_action_std}};
        if (s.oape_action_center.size())
          j["oape"]["action_center"] = vec_json(s.oape_action_center);
      }
      break;
    case ControllerKind::rl_pgs:
      j["alpha_step"] = s.pgs.alpha;
      j["eta"] = s.pgs.eta;
      j["max_inner_iters"] = s.pgs.max_inner_iters;
      j["u_init"] = Json::array({s.pgs.u_init});
      j["pgs"] = {{"u_guard", s.pgs.u_guard},
                  {"max_halvings", s.pgs.max_halvings},
                  {"refit_each_path", s.pgs.refit_each_path},
                  {"fit_drift", s.pgs.fit_drift},
                  {"offline_paths", s.pgs_offline_paths},
                  {"offline_action_std", s.pgs_offline_action_std},
                  {"variance_form", to_string(s.pgs_variance_form)}};
      break;
  }
  return j;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["process"] = to_json(c.process);
  j["controller"] = to_json(c.controller);
  j["n_learning_paths"] = c.n_learning_paths;
  j["evaluation_paths"] = c.evaluation_paths;
  j["replications"] = c.replications;
  j["master_seed"] = c.master_seed;
  j["y_star"] = vec_json(c.y_star);
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  if (c.threads) j["threads"] = c.threads;
  return j;
}

// ---------------------------------------------------------------------------

void validate(const ExperimentConfig& c) {
  const auto process = make_process(c.process);
  if (c.y_star.size() != process->output_dim())
    throw ConfigError("/y_star: has " + std::to_string(c.y_star.size()) +
                      " entries but the process has " + std::to_string(process->output_dim()) +
                      " outputs");
  const ProcessFamily family = family_of(c.process);
  const ControllerSpec& s = c.controller;
  const int m_u = process->control_dim();
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("/controller: " + what);
  };
  switch (s.kind) {
    case ControllerKind::null:
      need(s.u_null.size() == 0 || s.u_null.size() == m_u, "u_null has the wrong dimension");
      break;
    case ControllerKind::oracle:
    case ControllerKind::ewma:
      need(family == ProcessFamily::linear_cmp,
           to_string(s.kind) + " needs the linear_cmp process (known gain matrix)");
      need(s.ewma_a_init.size() == 0 || s.ewma_a_init.size() == process->output_dim(),
           "ewma_a_init has the wrong dimension");
      break;
    case ControllerKind::ghr:
      need(m_u == 1 && process->output_dim() == 1, "ghr needs a scalar process");
      need(family != ProcessFamily::linear_cmp && family != ProcessFamily::quadratic_cmp,
           "ghr needs a process with a scalar known gain (arima, wiener, gamma)");
      break;
    case ControllerKind::rl_alg1:
    case ControllerKind::oape:
      need(s.alg1.u_init.size() == 0 || s.alg1.u_init.size() == m_u, "u_init has the wrong dimension");
      need(s.oape_action_center.size() == 0 || s.oape_action_center.size() == m_u,
           "oape.action_center has the wrong dimension");
      break;
    case ControllerKind::rl_pgs:
      need(m_u == 1 && process->output_dim() == 1, "rl_pgs needs a scalar process");
      break;
  }
}

}  // namespace r2r

#include "tnirf/config.hpp"

#include "tnirf/errors.hpp"
#include "tnirf/io.hpp"
#include "tnirf/schema_data.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace tnirf {

using nlohmann::json;

namespace {

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "null") return v.is_null();
  return false;
}

std::string describe(const json& v) {
  std::string s = v.dump();
  return s.size() > 40 ? s.substr(0, 37) + "..." : s;
}

void check(const json& v, const json& schema, const std::string& ptr, std::vector<SchemaIssue>& issues) {
  if (!schema.is_object()) return;
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    std::string names;
    if (t.is_string()) {
      ok = has_type(v, t.get<std::string>());
      names = t.get<std::string>();
    } else {
      for (const auto& x : t) {
        ok = ok || has_type(v, x.get<std::string>());
        names += (names.empty() ? "" : " or ") + x.get<std::string>();
      }
    }
    if (!ok) {
      issues.push_back({ptr, "expected " + names + ", got " + describe(v)});
      return;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == v;
    if (!found) issues.push_back({ptr, "value " + describe(v) + " is not one of " + schema["enum"].dump()});
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>())
      issues.push_back({ptr, "must be >= " + schema["minimum"].dump()});
    if (schema.contains("maximum") && x > schema["maximum"].get<double>())
      issues.push_back({ptr, "must be <= " + schema["maximum"].dump()});
    if (schema.contains("exclusiveMinimum") && !(x > schema["exclusiveMinimum"].get<double>()))
      issues.push_back({ptr, "must be > " + schema["exclusiveMinimum"].dump()});
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
      issues.push_back({ptr, "needs at least " + schema["minItems"].dump() + " items"});
    if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>())
      issues.push_back({ptr, "allows at most " + schema["maxItems"].dump() + " items"});
    if (schema.contains("items"))
      for (std::size_t k = 0; k < v.size(); ++k) check(v[k], schema["items"], ptr + "/" + std::to_string(k), issues);
  }
  if (v.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema["required"]) {
        const auto k = key.get<std::string>();
        if (!v.contains(k)) issues.push_back({ptr + "/" + escape_token(k), "required key is missing"});
      }
    const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string child = ptr + "/" + escape_token(it.key());
      if (props && props->contains(it.key())) {
        check(it.value(), (*props)[it.key()], child, issues);
      } else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false) {
        issues.push_back({child, "unknown key"});
      }
    }
  }
  if (schema.contains("anyOf")) {
    bool any = false;
    for (const auto& alt : schema["anyOf"]) {
      std::vector<SchemaIssue> tmp;
      check(v, alt, ptr, tmp);
      any = any || tmp.empty();
    }
    if (!any) issues.push_back({ptr, "value " + describe(v) + " matches none of the allowed forms"});
  }
  if (schema.contains("if")) {
    std::vector<SchemaIssue> tmp;
    check(v, schema["if"], ptr, tmp);
    if (tmp.empty()) {
      if (schema.contains("then")) check(v, schema["then"], ptr, issues);
    } else if (schema.contains("else")) {
      check(v, schema["else"], ptr, issues);
    }
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? obj[key].get<T>() : fallback;
}

Vector vector_from(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t k = 0; k < arr.size(); ++k) v[static_cast<Eigen::Index>(k)] = arr[k].get<double>();
  return v;
}

Matrix matrix_from(const json& rows, std::size_t d, const std::string& ptr) {
  if (rows.size() != d)
    throw ConfigError(ptr, "expected " + std::to_string(d) + " rows, got " + std::to_string(rows.size()));
  Matrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (rows[i].size() != d)
      throw ConfigError(ptr + "/" + std::to_string(i),
                        "expected " + std::to_string(d) + " columns, got " + std::to_string(rows[i].size()));
    for (std::size_t j = 0; j < d; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
  }
  return m;
}

ModelConfig parse_model(const json& m) {
  ModelConfig mc;
  mc.meanfield = m["kind"] == "meanfield";
  mc.directed = get_or(m, "directed", false);
  if (mc.meanfield) {
    mc.mf = MeanFieldParams{m["a"].get<double>(), m["b"].get<double>(),      m["mu"].get<double>(),
                            m["sigma2"].get<double>(), m["n"].get<std::size_t>(), get_or(m, "p", 1.0)};
    mc.var = mc.mf.to_var();
  } else {
    const std::size_t d = m["mu"].size();
    if (d == 0) throw ConfigError("/model/mu", "must not be empty");
    if (mc.directed && d % 2 != 0) throw ConfigError("/model/mu", "directed models need an even dimension (in, out)");
    if (m.contains("n")) {
      const auto n = m["n"].get<std::size_t>();
      if ((mc.directed ? 2 * n : n) != d) throw ConfigError("/model/n", "does not match the length of /model/mu");
    }
    mc.var.mu = vector_from(m["mu"]);
    mc.var.B = matrix_from(m["B"], d, "/model/B");
    mc.var.Sigma = matrix_from(m["Sigma"], d, "/model/Sigma");
    try {
      mc.var.validate();
    } catch (const Error& e) {
      throw ConfigError("/model/Sigma", e.what());
    }
  }
  if (m.contains("theta0") && !m["theta0"].is_string()) {
    const std::size_t d = mc.n() * (mc.directed ? 2 : 1);
    if (m["theta0"].is_number()) {
      mc.theta0 = Vector::Constant(static_cast<Eigen::Index>(d), m["theta0"].get<double>());
    } else {
      if (m["theta0"].size() != d)
        throw ConfigError("/model/theta0", "expected " + std::to_string(d) + " values, got " +
                                               std::to_string(m["theta0"].size()));
      mc.theta0 = vector_from(m["theta0"]);
    }
  }
  return mc;
}

}  // namespace

std::size_t ModelConfig::n() const {
  if (meanfield) return mf.n;
  return directed ? var.dim() / 2 : var.dim();
}

FitnessState ModelConfig::initial_state() const {
  if (theta0) return FitnessState(*theta0, directed);
  return FitnessState(stationary_mean(var), directed);
}

std::vector<SchemaIssue> validate_against_schema(const json& instance, const json& schema) {
  std::vector<SchemaIssue> issues;
  check(instance, schema, "", issues);
  return issues;
}

const json& config_schema() {
  static const json schema = json::parse(detail::kConfigSchema);
  return schema;
}

RunConfig parse_config(const json& doc) {
  const auto issues = validate_against_schema(doc, config_schema());
  if (!issues.empty()) throw ConfigError(issues.front().pointer.empty() ? "/" : issues.front().pointer, issues.front().message);

  RunConfig rc;
  rc.raw = doc;
  if (doc.contains("seed")) rc.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("model")) rc.model = parse_model(doc["model"]);
  if (doc.contains("simulation")) rc.T = get_or(doc["simulation"], "T", rc.T);

  if (doc.contains("shock")) {
    const json& s = doc["shock"];
    if (s.contains("node")) {
      if (s["node"].is_string()) rc.shock.node.reset();
      else rc.shock.node = s["node"].get<std::size_t>();
    }
    const std::string kind = get_or<std::string>(s, "coordinate", "undirected");
    rc.shock.coordinate = kind == "in" ? CoordinateKind::in : kind == "out" ? CoordinateKind::out : CoordinateKind::undirected;
    rc.shock.delta = get_or(s, "delta", rc.shock.delta);
    rc.shock.horizon = get_or(s, "horizon", rc.shock.horizon);
  }
  if (rc.model && rc.shock.node && *rc.shock.node >= rc.model->n())
    throw ConfigError("/shock/node", "node " + std::to_string(*rc.shock.node) + " out of range");
  if (rc.model && rc.model->directed != (rc.shock.coordinate != CoordinateKind::undirected) && doc.contains("shock"))
    throw ConfigError("/shock/coordinate", rc.model->directed ? "directed models need coordinate in or out"
                                                               : "undirected models need coordinate undirected");

  if (doc.contains("mc")) {
    const json& m = doc["mc"];
    rc.mc.n_samples = get_or(m, "n_samples", rc.mc.n_samples);
    rc.mc.estimator = get_or<std::string>(m, "estimator", "rao_blackwell") == "edge_sampled" ? McEstimator::edge_sampled
                                                                                             : McEstimator::rao_blackwell;
    rc.mc.metric = get_or(m, "metric", rc.mc.metric);
    rc.mc.paths = get_or(m, "paths", rc.mc.paths);
    rc.mc.exact_integral = get_or(m, "exact_integral", rc.mc.exact_integral);
    const auto names = MetricRegistry::with_builtins().names();
    if (std::find(names.begin(), names.end(), rc.mc.metric) == names.end())
      throw ConfigError("/mc/metric", "unknown metric '" + rc.mc.metric + "'");
  }
  if (doc.contains("estimation")) {
    const json& e = doc["estimation"];
    rc.estimation.method = get_or(e, "method", rc.estimation.method);
    rc.estimation.kfssi.mode = get_or<std::string>(e, "mode", "meanfield") == "full" ? FitMode::full : FitMode::meanfield;
    rc.estimation.kfssi.free_gamma = get_or(e, "free_gamma", false);
    rc.estimation.kfssi.restarts = get_or(e, "restarts", rc.estimation.kfssi.restarts);
    rc.estimation.kfssi.em_tolerance = get_or(e, "em_tolerance", rc.estimation.kfssi.em_tolerance);
    rc.estimation.kfssi.em_max_iterations = get_or(e, "em_max_iterations", rc.estimation.kfssi.em_max_iterations);
  }
  if (doc.contains("benchmark")) {
    const json& b = doc["benchmark"];
    auto& c = rc.benchmark;
    c.n_sim = get_or(b, "n_sim", c.n_sim);
    c.n = get_or(b, "n", c.n);
    c.T = get_or(b, "T", c.T);
    c.a = get_or(b, "a", c.a);
    c.b = get_or(b, "b", c.b);
    c.sigma = get_or(b, "sigma", c.sigma);
    c.mu = get_or(b, "mu", c.mu);
    c.b_convention = get_or(b, "b_convention", c.b_convention);
    c.free_gamma = get_or(b, "free_gamma", c.free_gamma);
    c.restarts = get_or(b, "restarts", c.restarts);
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    auto& c = rc.sweep;
    if (s.contains("baseline")) {
      const json& b = s["baseline"];
      c.baseline = MeanFieldParams{b["a"].get<double>(), b["b"].get<double>(), 0.0, b["sigma2"].get<double>(),
                                   b["n"].get<std::size_t>(), get_or(b, "p", 1.0)};
    }
    c.mus = get_or(s, "mus", c.mus);
    c.delta = get_or(s, "delta", c.delta);
    c.horizon = get_or(s, "horizon", c.horizon);
    c.exact_integral = get_or(s, "exact_integral", c.exact_integral);
    c.deltas = get_or(s, "deltas", c.deltas);
    c.a_values = get_or(s, "a_values", c.a_values);
    c.b_values = get_or(s, "b_values", c.b_values);
    if (s.contains("ab_pairs")) {
      c.ab_pairs.clear();
      for (const auto& p : s["ab_pairs"]) c.ab_pairs.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    c.sigma2_values = get_or(s, "sigma2_values", c.sigma2_values);
    c.theta0_values = get_or(s, "theta0_values", c.theta0_values);
    c.threshold_mu_min = get_or(s, "threshold_mu_min", c.threshold_mu_min);
    c.threshold_mu_max = get_or(s, "threshold_mu_max", c.threshold_mu_max);
    c.threshold_mu_step = get_or(s, "threshold_mu_step", c.threshold_mu_step);
    if (c.threshold_mu_max < c.threshold_mu_min) throw ConfigError("/sweep/threshold_mu_max", "must be >= threshold_mu_min");
  }
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    rc.grid.m = get_or(g, "m", rc.grid.m);
    rc.grid.s2 = get_or(g, "s2", rc.grid.s2);
    rc.grid.r = get_or(g, "r", rc.grid.r);
  }
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 computation failed");
  std::ostringstream out;
  for (unsigned int k = 0; k < len; ++k) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
  return out.str();
}

std::string config_hash(const json& doc) { return sha256_hex(doc.dump()); }

}  // namespace tnirf

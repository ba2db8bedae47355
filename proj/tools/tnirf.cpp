// tnirf: command-line driver for simulation, impulse responses, sweeps and
// estimation. Every run writes manifest.json next to its outputs; `replay`
// re-executes a manifest.

#include "tnirf/config.hpp"
#include "tnirf/errors.hpp"
#include "tnirf/estimation.hpp"
#include "tnirf/gaussian_logistic.hpp"
#include "tnirf/ingest.hpp"
#include "tnirf/io.hpp"
#include "tnirf/irf.hpp"
#include "tnirf/log.hpp"
#include "tnirf/sampling.hpp"
#include "tnirf/var_dynamics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef TNIRF_VERSION
#define TNIRF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace tnirf;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3, kIo = 4 };

class UsageError : public Error {
public:
  using Error::Error;
};

// Everything a subcommand needs; serialized verbatim into the manifest.
struct Job {
  std::string command;
  ordered_json args = ordered_json::object();
  std::optional<json> config;
  std::uint64_t seed = 0;
  int threads = 0;
  fs::path out;
  std::vector<fs::path> inputs;
};

// --- helpers --------------------------------------------------------------------

ordered_json to_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

ordered_json to_json(const Matrix& m) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

Vector vector_of(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) v[static_cast<Eigen::Index>(k)] = a[k].get<double>();
  return v;
}

Matrix matrix_of(const json& a) {
  Matrix m(static_cast<Eigen::Index>(a.size()), a.empty() ? 0 : static_cast<Eigen::Index>(a[0].size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i][j].get<double>();
  return m;
}

ordered_json state_space_json(const StateSpaceParams& ssp, bool directed) {
  ordered_json p;
  p["directed"] = directed;
  p["mu"] = to_json(ssp.latent.mu);
  p["B"] = to_json(ssp.latent.B);
  p["Sigma"] = to_json(ssp.latent.Sigma);
  p["gamma"] = to_json(ssp.gamma);
  p["obs_noise"] = to_json(ssp.obs_noise);
  return p;
}

RunConfig job_config(const Job& job) {
  if (!job.config) return parse_config(json{{"version", 1}});
  return parse_config(*job.config);
}

std::string fmt(double x) { return format_double(x); }

// RFC 4180 quoting for free-text fields.
std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string q = "\"";
  for (char c : field) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  write_csv_row(out, header);
  for (const auto& r : rows) write_csv_row(out, r);
  write_file(path, out.str());
}

std::size_t max_out_degree_node(const TemporalNetwork& net) {
  std::vector<std::size_t> total(net.n(), 0);
  for (const auto& s : net.snapshots()) {
    const Degrees d = degrees(s);
    for (std::size_t i = 0; i < net.n(); ++i) total[i] += d.out[i];
  }
  return static_cast<std::size_t>(std::max_element(total.begin(), total.end()) - total.begin());
}

McOptions mc_options(const RunConfig& rc, const Job& job) {
  McOptions o;
  o.n_samples = rc.mc.n_samples;
  o.seed = job.seed;
  o.estimator = rc.mc.estimator;
  o.threads = job.threads;
  return o;
}

// --- subcommands ---------------------------------------------------------------

void cmd_simulate(const Job& job) {
  const RunConfig rc = job_config(job);
  if (!rc.model) throw ConfigError("/model", "required key is missing");
  const ModelConfig& m = *rc.model;
  Rng latent_rng = make_stream(job.seed, {0});
  Rng edge_rng = make_stream(job.seed, {1});
  FitnessSeries series = simulate_var(m.var_params(), m.initial_state(), rc.T, latent_rng);
  std::vector<AdjacencySnapshot> snaps;
  for (std::size_t t = 0; t < series.size(); ++t) {
    snaps.push_back(sample_network(series.states[t], m.directed, edge_rng));
    snaps.back().set_timestamp(series.time(t));
  }
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < m.n(); ++i) labels.push_back(std::to_string(i));
  const TemporalNetwork net(std::move(snaps), std::move(labels));

  std::ostringstream fit;
  write_fitness_csv(fit, series);
  write_file(job.out / "fitness.csv", fit.str());
  save_network(net, job.out / "network.csv", job.out / "network.json");
}

struct IrfModel {
  VarParams params;
  FitnessState theta_tau;
  bool directed = false;
  std::optional<std::size_t> max_out_node;
};

IrfModel irf_model(const Job& job, const RunConfig& rc) {
  IrfModel im;
  if (job.args.contains("params")) {
    const json fitted = read_json_file(job.args["params"].get<std::string>());
    try {
      const json& p = fitted.at("params");
      im.directed = p.at("directed").get<bool>();
      im.params.mu = vector_of(p.at("mu"));
      im.params.B = matrix_of(p.at("B"));
      im.params.Sigma = matrix_of(p.at("Sigma"));
      im.theta_tau = FitnessState(vector_of(fitted.at("theta_last")), im.directed);
      if (fitted.contains("max_out_degree_node")) im.max_out_node = fitted["max_out_degree_node"].get<std::size_t>();
    } catch (const json::exception& e) {
      throw IoError(std::string("fitted parameter file: ") + e.what());
    }
    im.params.validate();
  } else {
    if (!rc.model) throw ConfigError("/model", "required key is missing");
    im.params = rc.model->var_params();
    im.theta_tau = rc.model->initial_state();
    im.directed = rc.model->directed;
  }
  return im;
}

void cmd_irf(const Job& job) {
  const RunConfig rc = job_config(job);
  const std::string mode = job.args["mode"].get<std::string>();
  const std::size_t horizon = rc.shock.horizon;

  if (mode == "analytic") {
    if (job.args.contains("params") || !rc.model || !rc.model->meanfield)
      throw UsageError("analytic IRF needs a mean-field model (model.kind = meanfield)");
    if (rc.mc.metric != "density") throw UsageError("analytic IRF is available for the density metric only");
    const MeanFieldParams& mf = rc.model->mf;
    double theta0 = mf.stationary_fitness();
    if (rc.model->theta0) {
      const Vector& v = *rc.model->theta0;
      if ((v.array() != v[0]).any()) throw UsageError("analytic IRF needs a homogeneous theta0");
      theta0 = v[0];
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t t = 1; t <= horizon; ++t)
      rows.push_back({std::to_string(t), fmt(irf_density_meanfield(mf, theta0, rc.shock.delta, t, rc.mc.exact_integral))});
    write_csv(job.out / "irf.csv", {"t", "irf"}, rows);
    return;
  }

  const IrfModel im = irf_model(job, rc);
  const std::size_t n = im.theta_tau.n();
  std::size_t node = 0;
  if (rc.shock.node) {
    node = *rc.shock.node;
  } else if (im.max_out_node) {
    node = *im.max_out_node;
  } else {
    throw UsageError("shock.node = max_out_degree needs --params from `estimate`");
  }
  CoordinateKind kind = rc.shock.coordinate;
  if (im.directed && kind == CoordinateKind::undirected) kind = CoordinateKind::out;
  if (!im.directed && kind != CoordinateKind::undirected) throw UsageError("undirected model shocked on an in/out coordinate");
  ShockSpec shock;
  shock.delta = Vector::Zero(static_cast<Eigen::Index>(im.theta_tau.dim()));
  shock.delta[static_cast<Eigen::Index>(coordinate_index(kind, node, n))] = rc.shock.delta;

  const MetricRegistry registry = MetricRegistry::with_builtins();
  const Metric& metric = registry.get(rc.mc.metric);
  McOptions opt = mc_options(rc, job);
  if (rc.mc.paths > 0) {
    opt.n_samples = rc.mc.paths;
    const IrfPaths paths = irf_paths_mc(im.params, im.theta_tau, shock, metric, horizon, opt);
    std::vector<std::vector<std::string>> rows;
    for (const auto& b : paths.bands())
      rows.push_back({std::to_string(b.t), fmt(b.mean), fmt(b.p10), fmt(b.p90)});
    write_csv(job.out / "irf.csv", {"t", "mean", "p10", "p90"}, rows);
    std::vector<std::vector<std::string>> all;
    for (std::size_t r = 0; r < paths.paths.size(); ++r)
      for (std::size_t t = 0; t < paths.paths[r].size(); ++t)
        all.push_back({std::to_string(r), std::to_string(t + 1), fmt(paths.paths[r][t])});
    write_csv(job.out / "irf_paths.csv", {"replicate", "t", "irf"}, all);
    return;
  }
  const IrfSeries s = irf_metric_mc(im.params, im.theta_tau, shock, metric, horizon, opt);
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : s.points) rows.push_back({std::to_string(p.t), fmt(p.value), fmt(p.std_error)});
  write_csv(job.out / "irf.csv", {"t", "irf", "stderr"}, rows);
}

ordered_json sweep_spec_json(const SweepConfig& c) {
  ordered_json j;
  j["baseline"] = {{"n", c.baseline.n}, {"a", c.baseline.a}, {"b", c.baseline.b}, {"sigma2", c.baseline.sigma2},
                   {"p", c.baseline.p}};
  j["mus"] = c.mus;
  j["delta"] = c.delta;
  j["horizon"] = c.horizon;
  j["exact_integral"] = c.exact_integral;
  j["deltas"] = c.deltas;
  j["a_values"] = c.a_values;
  j["b_values"] = c.b_values;
  j["ab_pairs"] = c.ab_pairs;
  j["sigma2_values"] = c.sigma2_values;
  j["theta0_values"] = c.theta0_values;
  j["threshold_mu_min"] = c.threshold_mu_min;
  j["threshold_mu_max"] = c.threshold_mu_max;
  j["threshold_mu_step"] = c.threshold_mu_step;
  return j;
}

void cmd_sweep(const Job& job) {
  const RunConfig rc = job_config(job);
  const std::string study = job.args["study"].get<std::string>();
  const auto& studies = sweep_studies();
  if (std::find(studies.begin(), studies.end(), study) == studies.end())
    throw UsageError("unknown study '" + study + "'");
  const auto rows = comparative_statics(rc.sweep, study);
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows)
    out.push_back({r.study, r.parameter, fmt(r.value), fmt(r.mu), fmt(r.a), fmt(r.b), fmt(r.sigma2), fmt(r.theta0),
                   fmt(r.delta), r.skipped ? "" : std::to_string(r.t), r.skipped ? "" : fmt(r.irf), "",
                   r.skipped ? "1" : "0"});
  write_csv(job.out / ("sweep_" + study + ".csv"),
            {"study", "parameter", "value", "mu", "a", "b", "sigma2", "theta0", "delta", "t", "irf", "stderr", "skipped"},
            out);
  write_file(job.out / "sweep_spec.json", dump_json(sweep_spec_json(rc.sweep)));
  if (study == "sigma2_thresholds") {
    const Sigma2Thresholds th = locate_sigma2_thresholds(rc.sweep);
    ordered_json j;
    j["sigma2"] = rc.sweep.baseline.sigma2;
    j["delta"] = rc.sweep.delta;
    j["lower"] = th.lower ? ordered_json(*th.lower) : ordered_json(nullptr);
    j["upper"] = th.upper ? ordered_json(*th.upper) : ordered_json(nullptr);
    j["all_roots"] = th.all_roots;
    write_file(job.out / "thresholds.json", dump_json(j));
  }
}

void cmd_estimate(const Job& job) {
  const RunConfig rc = job_config(job);
  const TemporalNetwork net =
      load_network(job.args["network"].get<std::string>(), job.args["header"].get<std::string>());
  std::string method = rc.estimation.method;
  KfssiOptions kopt = rc.estimation.kfssi;
  if (job.args.contains("method")) method = job.args["method"].get<std::string>();
  if (job.args.contains("mode")) kopt.mode = job.args["mode"] == "full" ? FitMode::full : FitMode::meanfield;
  kopt.seed = job.seed;
  if (kopt.mode == FitMode::meanfield && net.directed())
    throw UsageError("mean-field estimation needs an undirected network; use --mode full");

  const MleSeries mle = mle_series(net);
  std::size_t clipped = 0;
  for (const auto& row : mle.clipped)
    for (bool c : row) clipped += c ? 1 : 0;

  ordered_json fitted;
  fitted["method"] = method;
  fitted["mode"] = kopt.mode == FitMode::full ? "full" : "meanfield";
  fitted["n"] = net.n();
  fitted["T"] = net.size();
  fitted["directed"] = net.directed();
  fitted["node_labels"] = net.node_labels();
  fitted["unconverged_snapshots"] = mle.unconverged;
  fitted["clipped_fraction"] =
      static_cast<double>(clipped) / static_cast<double>(mle.clipped.size() * mle.theta_hats.states.front().dim());
  fitted["max_out_degree_node"] = max_out_degree_node(net);

  FitnessSeries filtered;
  StateSpaceParams ssp;
  if (method == "nssi") {
    const auto d = static_cast<Eigen::Index>(mle.theta_hats.states.front().dim());
    if (kopt.mode == FitMode::full) {
      const NssiFull f = nssi_fit_full(mle.theta_hats, mle.clipped);
      ssp.latent = f.params;
      fitted["rows_used"] = f.rows_used;
    } else {
      const NssiMeanField f = nssi_fit_meanfield(mle.theta_hats, mle.clipped);
      ssp.latent = f.params.to_var();
      fitted["meanfield"] = {{"a", f.params.a}, {"b", f.params.b}, {"mu", f.params.mu}, {"sigma2", f.params.sigma2},
                             {"n", f.params.n}, {"se_a", f.se_a}, {"se_b", f.se_b}, {"se_mu", f.se_mu}};
      fitted["rows_used"] = f.rows_used;
    }
    ssp.gamma = Vector::Zero(d);
    ssp.obs_noise = Vector::Zero(d);
    fitted["projected"] = project_spectral_radius(ssp.latent.B);
    filtered = mle.theta_hats;
  } else if (method == "kfssi") {
    const KfssiResult f = kfssi_fit(mle.theta_hats, mle.clipped, kopt);
    ssp = f.params;
    filtered = f.filtered;
    fitted["loglik"] = f.loglik;
    fitted["initial_loglik"] = f.initial_loglik;
    fitted["iterations"] = f.iterations;
    fitted["projected"] = f.projected;
    if (f.meanfield)
      fitted["meanfield"] = {{"a", f.meanfield->a}, {"b", f.meanfield->b}, {"mu", f.meanfield->mu},
                             {"sigma2", f.meanfield->sigma2}, {"n", f.meanfield->n}};
  } else {
    throw UsageError("unknown method '" + method + "'");
  }
  fitted["spectral_radius"] = spectral_radius(ssp.latent.B);
  fitted["params"] = state_space_json(ssp, net.directed());
  fitted["theta_last"] = to_json(filtered.states.back().values());
  write_file(job.out / "fitted.json", dump_json(fitted));
  std::ostringstream csv;
  write_fitness_csv(csv, filtered);
  write_file(job.out / "filtered.csv", csv.str());
}

std::vector<std::string> error_cells(const std::string& name, const MethodErrors& e) {
  return {name, fmt(e.theta), fmt(e.a), fmt(e.b), fmt(e.mu), fmt(e.sigma2)};
}

ordered_json errors_json(const MethodErrors& e) {
  return {{"theta", e.theta}, {"theta_rel", e.theta_rel}, {"a", e.a}, {"b", e.b}, {"mu", e.mu}, {"sigma2", e.sigma2}};
}

void cmd_benchmark(const Job& job) {
  const RunConfig rc = job_config(job);
  BenchmarkConfig cfg = rc.benchmark;
  cfg.threads = job.threads;
  const BenchmarkReport rep = run_benchmark(cfg, job.seed);
  const std::vector<std::string> header{"method", "theta", "a", "b", "mu", "sigma2"};
  write_csv(job.out / "benchmark.csv", header, {error_cells("N-SSI", rep.nssi), error_cells("KF-SSI", rep.kfssi)});

  std::vector<std::vector<std::string>> reps;
  ordered_json failures = ordered_json::array();
  for (const auto& r : rep.replicates) {
    if (r.dropped) {
      failures.push_back({{"replicate", r.index}, {"error", r.error}});
      continue;
    }
    auto a = error_cells("N-SSI", r.nssi);
    auto b = error_cells("KF-SSI", r.kfssi);
    a.insert(a.begin(), std::to_string(r.index));
    b.insert(b.begin(), std::to_string(r.index));
    reps.push_back(a);
    reps.push_back(b);
  }
  write_csv(job.out / "replicates.csv", {"replicate", "method", "theta", "a", "b", "mu", "sigma2"}, reps);

  ordered_json meta;
  meta["n"] = cfg.n;
  meta["T"] = cfg.T;
  meta["n_sim"] = cfg.n_sim;
  meta["seed"] = job.seed;
  meta["truth"] = {{"a", cfg.a}, {"b", cfg.b}, {"sigma", cfg.sigma}, {"mu", cfg.mu}, {"b_convention", cfg.b_convention}};
  meta["dropped"] = rep.dropped;
  meta["failures"] = failures;
  meta["nssi"] = errors_json(rep.nssi);
  meta["kfssi"] = errors_json(rep.kfssi);
  meta["reference"] = {{"nssi", errors_json(BenchmarkReport::reference_nssi())},
                       {"kfssi", errors_json(BenchmarkReport::reference_kfssi())}};
  write_file(job.out / "benchmark.json", dump_json(meta));
  for (const auto& f : failures)
    std::cerr << "replicate " << f["replicate"].get<std::size_t>() << " dropped: " << f["error"].get<std::string>() << "\n";
}

void cmd_grid(const Job& job) {
  const RunConfig rc = job_config(job);
  const auto rows = density_grid(rc.grid.m, rc.grid.s2, rc.grid.r);
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows) out.push_back({fmt(r.m), fmt(r.s2), fmt(r.r), fmt(r.exact), fmt(r.approx2), fmt(r.taylor)});
  write_csv(job.out / "grid.csv", {"m", "s2", "r", "exact", "approx2", "taylor"}, out);
}

void cmd_synth(const Job& job) {
  const SynthEmid s = synth_emid(job.seed);
  save_network(s.network, job.out / "network.csv", job.out / "network.json");
  ordered_json truth;
  truth["params"] = state_space_json(s.truth, true);
  truth["spectral_radius"] = spectral_radius(s.truth.latent.B);
  write_file(job.out / "truth.json", dump_json(truth));
  std::ostringstream csv;
  write_fitness_csv(csv, s.latent);
  write_file(job.out / "latent.csv", csv.str());
}

void cmd_ingest(const Job& job) {
  std::istringstream in(read_file(job.args["input"].get<std::string>()));
  const IngestResult res = aggregate_weekly(in);
  const auto threshold = job.args["threshold"].get<std::size_t>();
  const bool drop_isolated = !job.args["keep_isolated"].get<bool>();
  const FilterResult f = filter_nodes(res.network, threshold, drop_isolated);
  save_network(f.network, job.out / "network.csv", job.out / "network.json");
  std::vector<std::vector<std::string>> rej;
  for (const auto& r : res.rejects) rej.push_back({std::to_string(r.line), quote_csv(r.reason), quote_csv(r.content)});
  write_csv(job.out / "rejects.csv", {"line", "reason", "content"}, rej);
  ordered_json summary;
  summary["accepted_transactions"] = res.accepted;
  summary["rejected_rows"] = res.rejects.size();
  summary["weeks"] = res.network.size();
  summary["nodes_before"] = res.network.n();
  summary["nodes_after"] = f.network.n();
  std::vector<std::string> by_degree, isolated;
  for (auto k : f.removed_by_degree) by_degree.push_back(res.network.node_labels()[k]);
  for (auto k : f.removed_isolated) isolated.push_back(res.network.node_labels()[k]);
  summary["removed_by_degree"] = by_degree;
  summary["removed_isolated"] = isolated;
  write_file(job.out / "filter.json", dump_json(summary));
  if (!res.rejects.empty()) std::cerr << res.rejects.size() << " malformed rows written to rejects.csv\n";
}

void dispatch(const Job& job) {
  static const std::map<std::string, void (*)(const Job&)> table{
      {"simulate", cmd_simulate}, {"irf", cmd_irf},     {"sweep", cmd_sweep}, {"estimate", cmd_estimate},
      {"benchmark", cmd_benchmark}, {"grid", cmd_grid}, {"synth", cmd_synth}, {"ingest", cmd_ingest}};
  const auto it = table.find(job.command);
  if (it == table.end()) throw UsageError("unknown command '" + job.command + "'");
  it->second(job);
}

// --- manifest ---------------------------------------------------------------------

void write_manifest(const Job& job) {
  ordered_json m;
  m["tool"] = "tnirf";
  m["version"] = TNIRF_VERSION;
  m["command"] = job.command;
  m["args"] = job.args;
  m["seed"] = job.seed;
  m["config"] = job.config ? ordered_json(*job.config) : ordered_json(nullptr);
  m["config_sha256"] = job.config ? config_hash(*job.config) : "";
  ordered_json inputs = ordered_json::array();
  for (const auto& p : job.inputs) inputs.push_back({{"path", p.string()}, {"sha256", sha256_hex(read_file(p))}});
  m["inputs"] = inputs;
  write_file(job.out / "manifest.json", dump_json(m));
}

void run(const Job& job) {
  fs::create_directories(job.out);
  dispatch(job);
  write_manifest(job);
}

Job replay_job(const fs::path& manifest_path, const fs::path& out, int threads) {
  ordered_json m;
  try {
    m = ordered_json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw IoError("manifest is not valid JSON: " + std::string(e.what()));
  }
  Job job;
  try {
    job.command = m.at("command").get<std::string>();
    job.args = m.at("args");
    job.seed = m.at("seed").get<std::uint64_t>();
    if (!m.at("config").is_null()) job.config = m["config"];
    for (const auto& in : m.at("inputs")) {
      const fs::path p = in.at("path").get<std::string>();
      if (sha256_hex(read_file(p)) != in.at("sha256").get<std::string>())
        throw IoError("input '" + p.string() + "' changed since the manifest was written");
      job.inputs.push_back(p);
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
  job.out = out;
  job.threads = threads;
  return job;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UsageError*>(&e) ||
      dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
      dynamic_cast<const DomainError*>(&e))
    return kConfig;
  if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const StationarityError*>(&e)) return kNumerical;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Impulse response analysis for temporal networks with latent VAR fitness dynamics", "tnirf"};
  app.set_version_flag("--version", TNIRF_VERSION);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("-c,--config", config_path, "Run configuration (JSON)");
    if (needs_config) c->required();
    sub->add_option("-o,--out", out_dir, "Output directory")->required();
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--threads", threads, "Worker threads (0: OpenMP default); never changes results");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate latent fitness and network snapshots");
  common(simulate, true);

  std::string irf_mode = "analytic", params_path;
  auto* irf = app.add_subcommand("irf", "Impulse response of a network metric");
  common(irf, false);
  irf->add_option("--mode", irf_mode, "analytic (mean-field density) or mc")
      ->check(CLI::IsMember({"analytic", "mc"}));
  irf->add_option("--params", params_path, "fitted.json from `estimate` (mc mode)")->check(CLI::ExistingFile);

  std::string study;
  auto* sweep = app.add_subcommand("sweep", "Comparative-statics figure data");
  sweep->add_option("study", study, "Study name")->required();
  common(sweep, false);

  std::string network_path, header_path, method, mode;
  auto* estimate = app.add_subcommand("estimate", "Fit latent dynamics to an observed temporal network");
  common(estimate, false);
  estimate->add_option("--network", network_path, "Arc list CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--header", header_path, "Network JSON header (default: <network stem>.json)");
  estimate->add_option("--method", method, "nssi or kfssi")->check(CLI::IsMember({"nssi", "kfssi"}));
  estimate->add_option("--mode", mode, "full or meanfield")->check(CLI::IsMember({"full", "meanfield"}));

  auto* benchmark = app.add_subcommand("benchmark", "N-SSI versus KF-SSI simulation benchmark");
  common(benchmark, false);

  auto* grid = app.add_subcommand("grid", "Logistic-normal integral and density approximations on a grid");
  common(grid, false);

  auto* synth = app.add_subcommand("synth", "Synthetic 8-bank weekly interbank panel");
  common(synth, false);

  std::string input_path;
  std::size_t threshold = 100;
  bool keep_isolated = false;
  auto* ingest = app.add_subcommand("ingest", "Aggregate transactions into weekly snapshots and filter nodes");
  common(ingest, false);
  ingest->add_option("--input", input_path, "CSV with header date,lender,borrower[,amount]")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--threshold", threshold, "Cumulative in- and out-degree threshold");
  ingest->add_flag("--keep-isolated", keep_isolated, "Do not remove nodes isolated in some week");

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run the job recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);
  replay->add_option("-o,--out", out_dir, "Output directory")->required();
  replay->add_option("--threads", threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    Job job;
    if (replay->parsed()) {
      job = replay_job(manifest_path, out_dir, threads);
    } else {
      CLI::App* sub = app.get_subcommands().front();
      job.command = sub->get_name();
      job.out = out_dir;
      job.threads = threads;
      if (!config_path.empty()) {
        job.config = load_config(config_path).raw;
      }
      std::uint64_t s = 0;
      if (job.config && job.config->contains("seed")) s = (*job.config)["seed"].get<std::uint64_t>();
      job.seed = seed.value_or(s);

      if (sub == irf) {
        job.args["mode"] = irf_mode;
        if (!params_path.empty()) {
          job.args["params"] = params_path;
          job.inputs.emplace_back(params_path);
        }
      } else if (sub == sweep) {
        job.args["study"] = study;
      } else if (sub == estimate) {
        if (header_path.empty()) header_path = fs::path(network_path).replace_extension(".json").string();
        job.args["network"] = network_path;
        job.args["header"] = header_path;
        job.inputs.emplace_back(network_path);
        job.inputs.emplace_back(header_path);
        if (!method.empty()) job.args["method"] = method;
        if (!mode.empty()) job.args["mode"] = mode;
      } else if (sub == ingest) {
        job.args["input"] = input_path;
        job.args["threshold"] = threshold;
        job.args["keep_isolated"] = keep_isolated;
        job.inputs.emplace_back(input_path);
      }
    }
    run(job);
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

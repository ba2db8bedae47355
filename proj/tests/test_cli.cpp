// Runs the tnirf executable end to end. Paths come from the build.

#include "tnirf/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kTool = TNIRF_CLI_PATH;
const fs::path kConfigs = TNIRF_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "tnirf_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = kTool.string() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return tnirf::read_file(p); }

std::size_t lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

bool same_tree(const fs::path& a, const fs::path& b) {
  for (const auto& e : fs::directory_iterator(a)) {
    const fs::path other = b / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("simulate writes the expected files deterministically") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  const std::string cfg = (kConfigs / "baseline.json").string();
  REQUIRE(run("simulate -c " + cfg + " -o " + a.string()) == 0);
  REQUIRE(run("simulate -c " + cfg + " -o " + b.string() + " --threads 1") == 0);
  CHECK(same_tree(a, b));
  // T = 100 states of n = 50 nodes.
  CHECK(lines(a / "fitness.csv") == 1 + 100 * 50);
  const auto header = nlohmann::json::parse(slurp(a / "network.json"));
  CHECK(header["T"] == 100);
  CHECK(header["n"] == 50);
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["config_sha256"].get<std::string>().size() == 64);
  CHECK(manifest["version"] == TNIRF_VERSION);
  const auto c = scratch("sim_c");
  REQUIRE(run("simulate -c " + cfg + " -o " + c.string() + " --seed 43") == 0);
  CHECK(slurp(a / "fitness.csv") != slurp(c / "fitness.csv"));
}

TEST_CASE("exit codes") {
  const auto out = scratch("errors");
  const fs::path bad = out / "bad.json";
  tnirf::write_file(bad, R"({"version": 1, "model": {"kind": "meanfield", "n": 5, "a": 0.3, "b": 0.01, "mu": 0}})");
  CHECK(run("simulate -c " + bad.string() + " -o " + (out / "x").string()) == 2);
  const std::string msg = out.string() + "/msg.txt";
  const int status = std::system((kTool.string() + " simulate -c " + bad.string() + " -o " + (out / "x").string() + " 2>" + msg).c_str());
  CHECK(status != 0);
  CHECK(slurp(msg).find("/model/sigma2") != std::string::npos);

  CHECK(run("simulate -c " + (out / "missing.json").string() + " -o " + (out / "x").string()) == 4);
  CHECK(run("irf -c " + (kConfigs / "full_model.json").string() + " -o " + (out / "y").string()) == 2);
  CHECK(run("sweep nonsense -o " + (out / "z").string()) == 2);
  CHECK(run("frobnicate") == 2);
  const fs::path unstable = out / "unstable.json";
  tnirf::write_file(unstable,
                    R"({"version": 1, "model": {"kind": "meanfield", "n": 50, "a": 0.6, "b": 0.01, "mu": 0, "sigma2": 0.1, "theta0": 0}})");
  CHECK(run("irf -c " + unstable.string() + " -o " + (out / "u").string()) == 3);
}

TEST_CASE("irf: zero shock, decay and manifest replay") {
  const auto dir = scratch("irf");
  const fs::path zero = dir / "zero.json";
  tnirf::write_file(zero, R"({"version": 1, "model": {"kind": "meanfield", "n": 50, "a": 0.3, "b": 0.01, "mu": -0.3, "sigma2": 0.1},
                              "shock": {"delta": 0, "horizon": 5}, "mc": {"n_samples": 200}})");
  REQUIRE(run("irf --mode mc -c " + zero.string() + " -o " + (dir / "z").string()) == 0);
  std::istringstream in(slurp(dir / "z" / "irf.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,irf,stderr");
  while (std::getline(in, line)) CHECK(line.substr(line.find(',')) == ",0,0");

  const fs::path longrun = dir / "long.json";
  tnirf::write_file(longrun, R"({"version": 1, "model": {"kind": "meanfield", "n": 50, "a": 0.3, "b": 0.01, "mu": -0.3, "sigma2": 0.1},
                                 "shock": {"horizon": 200}})");
  REQUIRE(run("irf -c " + longrun.string() + " -o " + (dir / "l").string()) == 0);
  std::istringstream rows(slurp(dir / "l" / "irf.csv"));
  std::string last;
  while (std::getline(rows, line)) last = line;
  CHECK(last.rfind("200,", 0) == 0);
  CHECK(std::abs(std::stod(last.substr(4))) < 1e-6);

  REQUIRE(run("replay " + (dir / "l" / "manifest.json").string() + " -o " + (dir / "l2").string()) == 0);
  CHECK(same_tree(dir / "l", dir / "l2"));
}

TEST_CASE("sweep outputs are reproducible and shaped") {
  const auto a = scratch("sweep_a"), b = scratch("sweep_b");
  REQUIRE(run("sweep delta -o " + a.string()) == 0);
  REQUIRE(run("sweep delta -o " + b.string()) == 0);
  CHECK(same_tree(a, b));
  CHECK(lines(a / "sweep_delta.csv") == 1 + 3 * 3 * 20);
  REQUIRE(run("sweep sigma2_thresholds -o " + a.string()) == 0);
  const auto th = nlohmann::json::parse(slurp(a / "thresholds.json"));
  CHECK(th["lower"].get<double>() < 0.0);
  CHECK(th["upper"].get<double>() > 0.0);
}

TEST_CASE("synthetic pipeline: synth, estimate both methods, irf bands") {
  const auto dir = scratch("pipeline");
  REQUIRE(run("synth --seed 7 -o " + (dir / "synth").string()) == 0);
  const std::string net = (dir / "synth" / "network.csv").string();
  for (const std::string method : {"nssi", "kfssi"}) {
    CAPTURE(method);
    REQUIRE(run("estimate --network " + net + " --method " + method + " --mode full -o " + (dir / method).string()) == 0);
    const auto fitted = nlohmann::json::parse(slurp(dir / method / "fitted.json"));
    CHECK(fitted["spectral_radius"].get<double>() < 1.0);
    CHECK(fitted["params"]["B"].size() == 16);
    CHECK(lines(dir / method / "filtered.csv") == 1 + 40 * 16);
  }
  const std::string cfg = (kConfigs / "emid.json").string();
  const std::string params = (dir / "kfssi" / "fitted.json").string();
  REQUIRE(run("irf --mode mc -c " + cfg + " --params " + params + " -o " + (dir / "irf").string()) == 0);
  std::istringstream in(slurp(dir / "irf" / "irf.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,mean,p10,p90");
  CHECK(lines(dir / "irf" / "irf_paths.csv") == 1 + 500 * 40);
  REQUIRE(run("replay " + (dir / "irf" / "manifest.json").string() + " -o " + (dir / "irf2").string()) == 0);
  CHECK(same_tree(dir / "irf", dir / "irf2"));
  // Estimation on a directed network in mean-field mode is a usage error.
  CHECK(run("estimate --network " + net + " --method kfssi --mode meanfield -o " + (dir / "mf").string()) == 2);
}

TEST_CASE("grid and ingest") {
  const auto dir = scratch("grid");
  REQUIRE(run("grid -o " + dir.string()) == 0);
  CHECK(lines(dir / "grid.csv") == 1 + 9 * 5 * 2);
  const fs::path tx = dir / "tx.csv";
  tnirf::write_file(tx, "date,lender,borrower\n2014-01-06,A,B\n2014-01-07,B,A\nnot-a-date,A,B\n");
  REQUIRE(run("ingest --input " + tx.string() + " --threshold 0 -o " + (dir / "ing").string()) == 0);
  CHECK(lines(dir / "ing" / "rejects.csv") == 2);
  const auto summary = nlohmann::json::parse(slurp(dir / "ing" / "filter.json"));
  CHECK(summary["nodes_after"] == 2);
  CHECK(run("ingest --input " + tx.string() + " --threshold 5 -o " + (dir / "ing2").string()) == 2);
}

TEST_CASE("benchmark writes the table-shaped report") {
  const auto dir = scratch("bench");
  const fs::path cfg = dir / "cfg.json";
  tnirf::write_file(cfg, R"({"version": 1, "seed": 1, "benchmark": {"n_sim": 1, "T": 30, "restarts": 0}})");
  REQUIRE(run("benchmark -c " + cfg.string() + " -o " + dir.string()) == 0);
  std::istringstream in(slurp(dir / "benchmark.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "method,theta,a,b,mu,sigma2");
  std::getline(in, line);
  CHECK(line.rfind("N-SSI,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("KF-SSI,", 0) == 0);
  const auto meta = nlohmann::json::parse(slurp(dir / "benchmark.json"));
  CHECK(meta["reference"]["kfssi"]["mu"] == 0.118);
  CHECK(meta["n_sim"] == 1);
}

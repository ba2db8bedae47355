#include "tnirf/config.hpp"
#include "tnirf/errors.hpp"
#include "tnirf/ingest.hpp"
#include "tnirf/io.hpp"
#include "tnirf/var_dynamics.hpp"

#include <doctest.h>

#include <sstream>

using namespace tnirf;

namespace {

// Three banks over three calendar weeks; week 2 is empty.
const char* kFixture =
    "date,lender,borrower,amount\n"
    "2014-01-06,A,B,10\n"   // Monday, week 1
    "2014-01-08,A,B,5\n"    // same pair, same week
    "2014-01-12,B,C,1\n"    // Sunday, still week 1
    "2014-01-27,C,A,3\n"    // week 3
    "2014-01-28T09:30,A,C,2\n"
    "2014-02-30,A,B,1\n"    // bad date
    "2014-01-29,B,B,1\n"    // self transaction
    "2014-01-29,,C,1\n"     // empty lender
    "2014-01-29,A\n";       // short row

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> arcs_of(const TemporalNetwork& net) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
  for (const auto& s : net.snapshots()) out.push_back(s.arcs());
  return out;
}

}  // namespace

TEST_CASE("weekly aggregation of the three-bank fixture") {
  std::istringstream in(kFixture);
  const auto res = aggregate_weekly(in);
  CHECK(res.accepted == 5);
  CHECK(res.rejects.size() == 4);
  CHECK(res.network.node_labels() == std::vector<std::string>{"A", "B", "C"});
  REQUIRE(res.network.size() == 4);
  CHECK(res.network[0].timestamp() == 20140106);
  CHECK(res.network[1].timestamp() == 20140113);
  CHECK(res.network[2].timestamp() == 20140120);
  CHECK(res.network[3].timestamp() == 20140127);
  using Arcs = std::vector<std::pair<std::size_t, std::size_t>>;
  const auto arcs = arcs_of(res.network);
  CHECK(arcs[0] == Arcs{{0, 1}, {1, 2}});
  CHECK(arcs[1].empty());
  CHECK(arcs[2].empty());
  CHECK(arcs[3] == Arcs{{0, 2}, {2, 0}});
  CHECK(res.rejects[0].line == 7);
  CHECK(res.rejects[1].reason == "lender equals borrower");
}

TEST_CASE("ingest edge cases") {
  CHECK(week_start("2014-01-01") == 20131230);
  CHECK(week_start("2016-02-29") == 20160229);
  CHECK_THROWS_AS(week_start("2015-02-29"), ValidationError);
  CHECK_THROWS_AS(week_start("14-01-01"), ValidationError);
  std::istringstream bad_header("when,who,whom\n2014-01-06,A,B\n");
  CHECK_THROWS_AS(aggregate_weekly(bad_header), ValidationError);
  std::vector<Transaction> two{{0, "2014-01-06", "x", "y"}, {0, "2014-01-15", "x", "y"}};
  const auto res = aggregate_weekly(two);
  CHECK(res.network.size() == 2);
  CHECK(res.network[0].has_arc(0, 1));
  CHECK(res.network[1].has_arc(0, 1));
}

TEST_CASE("property: aggregate, serialize, parse round trip") {
  std::istringstream in(kFixture);
  const auto res = aggregate_weekly(in);
  std::ostringstream csv;
  write_network_csv(csv, res.network);
  std::istringstream back(csv.str());
  const auto parsed = read_network(back, network_header(res.network));
  CHECK(parsed == res.network);
}

TEST_CASE("filter: threshold 0 without isolation rule is the identity") {
  std::istringstream in(kFixture);
  const auto res = aggregate_weekly(in);
  const auto f = filter_nodes(res.network, 0, false);
  CHECK(f.network == res.network);
  CHECK(f.kept == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("filter: star whose leaves fall below the threshold") {
  // Hub 0 trades both ways with leaves 1..3 every week, leaf 3 only once.
  std::vector<AdjacencySnapshot> snaps;
  for (int t = 0; t < 4; ++t) {
    AdjacencySnapshot s(4, true, t + 1);
    for (std::size_t leaf : {1, 2}) {
      s.set_arc(0, leaf);
      s.set_arc(leaf, 0);
    }
    if (t == 0) {
      s.set_arc(0, 3);
      s.set_arc(3, 0);
    }
    snaps.push_back(s);
  }
  const TemporalNetwork net(snaps, {"hub", "l1", "l2", "l3"});
  const auto f = filter_nodes(net, 3, false);
  CHECK(f.kept == std::vector<std::size_t>{0, 1, 2});
  CHECK(f.removed_by_degree == std::vector<std::size_t>{3});
  // Without a degree rule leaf 3 still goes: it is isolated in weeks 2-4.
  const auto g = filter_nodes(net, 0, true);
  CHECK(g.removed_isolated == std::vector<std::size_t>{3});
  CHECK_THROWS_AS(filter_nodes(net, 100, false), DomainError);
}

TEST_CASE("filter: isolation removal runs to a fixed point") {
  // 0-1 linked every week, 2 only linked to 3, 3 linked to 2 in week 1 and
  // to 0 in week 2: removing 2 (isolated in week 2) isolates 3 in week 1.
  AdjacencySnapshot w1(4, false, 1), w2(4, false, 2);
  w1.set_arc(0, 1);
  w1.set_arc(2, 3);
  w2.set_arc(0, 1);
  w2.set_arc(0, 3);
  const TemporalNetwork net({w1, w2}, {"a", "b", "c", "d"});
  const auto f = filter_nodes(net, 0, true);
  CHECK(f.kept == std::vector<std::size_t>{0, 1});
  const auto again = filter_nodes(f.network, 0, true);
  CHECK(again.network == f.network);
}

TEST_CASE("synthetic interbank panel") {
  const auto a = synth_emid(11);
  const auto b = synth_emid(11);
  CHECK(a.network == b.network);
  CHECK(a.latent.as_matrix() == b.latent.as_matrix());
  CHECK(a.network.n() == kSynthBanks);
  CHECK(a.network.size() == kSynthWeeks);
  CHECK(a.network.directed());
  CHECK(spectral_radius(a.truth.latent.B) < 1.0);
  const auto f = filter_nodes(a.network, kSynthThreshold, true);
  CHECK(f.kept.size() == kSynthBanks);
  std::size_t positive = 0;
  for (auto v : a.truth.latent.B.reshaped()) positive += v > 0 ? 1 : 0;
  CHECK(positive > 64);
  CHECK(positive < 256 - 64);
}

TEST_CASE("fitness CSV round trip and errors") {
  const VarParams var = MeanFieldParams{0.5, 0.05, 0.1, 0.2, 3, 1.0}.to_var();
  auto s = simulate_var(var, FitnessState::undirected(Vector::Zero(3)), 5, 1);
  std::ostringstream out;
  write_fitness_csv(out, s);
  std::istringstream in(out.str());
  const auto back = read_fitness_csv(in);
  CHECK(back.as_matrix() == s.as_matrix());
  std::istringstream bad("t,node,coordinate_kind,value\n1,0,sideways,0.5\n");
  CHECK_THROWS_AS(read_fitness_csv(bad), IoError);
  std::istringstream gap("t,node,coordinate_kind,value\n1,0,undirected,0.5\n1,2,undirected,0.5\n");
  CHECK_THROWS_AS(read_fitness_csv(gap), IoError);
}

TEST_CASE("network CSV errors carry line numbers") {
  nlohmann::json h{{"n", 2}, {"directed", true}, {"T", 1}, {"node_labels", {"a", "b"}}, {"timestamps", {5}}};
  std::istringstream bad("t,i,j\n5,0,7\n");
  try {
    read_network(bad, h);
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream self("t,i,j\n5,1,1\n");
  CHECK_THROWS_AS(read_network(self, h), IoError);
  std::istringstream when("t,i,j\n6,0,1\n");
  CHECK_THROWS_AS(read_network(when, h), IoError);
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, -1e-300, 123456.789, 1.0 / 3.0}) CHECK(parse_double(format_double(x), "x") == x);
  CHECK_THROWS_AS(parse_double("1.5x", "field"), IoError);
  CHECK_THROWS_AS(parse_int("", "field"), IoError);
  CHECK(split_csv_line("a,,b\r") == std::vector<std::string>{"a", "", "b"});
}

// --- configuration ------------------------------------------------------------------

TEST_CASE("config: missing key reports its pointer") {
  const auto doc = nlohmann::json::parse(R"({"version": 1, "model": {"kind": "meanfield", "n": 5, "a": 0.3, "b": 0.01, "mu": 0}})");
  try {
    parse_config(doc);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.pointer() == "/model/sigma2");
  }
}

TEST_CASE("config: schema and semantic errors") {
  auto pointer_of = [](const char* text) {
    try {
      parse_config(nlohmann::json::parse(text));
    } catch (const ConfigError& e) {
      return e.pointer();
    }
    return std::string("<none>");
  };
  CHECK(pointer_of(R"({"version": 2})") == "/version");
  CHECK(pointer_of(R"({"version": 1, "extra": 1})") == "/extra");
  CHECK(pointer_of(R"({"version": 1, "mc": {"n_samples": 1}})") == "/mc/n_samples");
  CHECK(pointer_of(R"({"version": 1, "mc": {"metric": "clustering"}})") == "/mc/metric");
  CHECK(pointer_of(R"({"version": 1, "model": {"kind": "full", "mu": [0, 0], "B": [[0.1, 0], [0, 0.1], [0, 0]], "Sigma": [[1, 0], [0, 1]]}})") ==
        "/model/B");
  CHECK(pointer_of(R"({"version": 1, "model": {"kind": "full", "mu": [0, 0], "B": [[0.1, 0], [0, 0.1, 3]], "Sigma": [[1, 0], [0, 1]]}})") ==
        "/model/B/1");
  CHECK(pointer_of(R"({"version": 1, "model": {"kind": "meanfield", "n": 4, "a": 0.3, "b": 0.01, "mu": 0, "sigma2": 0.1, "theta0": [1, 2]}})") ==
        "/model/theta0");
  CHECK(pointer_of(R"({"version": 1, "model": {"kind": "meanfield", "n": 4, "a": 0.3, "b": 0.01, "mu": 0, "sigma2": 0.1}, "shock": {"node": 9}})") ==
        "/shock/node");
  CHECK(pointer_of(R"({"version": 1, "model": {"kind": "meanfield", "n": 4, "a": 0.3, "b": 0.01, "mu": 0, "sigma2": -1}})") ==
        "/model/sigma2");
  CHECK(pointer_of(R"({"version": 1, "grid": {"r": [2]}})") == "/grid/r/0");
  CHECK(pointer_of(R"({"version": 1})") == "<none>");
}

TEST_CASE("config: defaults and parsed values") {
  const auto rc = parse_config(nlohmann::json::parse(
      R"({"version": 1, "seed": 4, "model": {"kind": "meanfield", "n": 6, "a": 0.3, "b": 0.01, "mu": -0.3, "sigma2": 0.1, "theta0": 0.5},
          "shock": {"node": "max_out_degree", "delta": 2}, "simulation": {"T": 12}})"));
  CHECK(rc.seed == 4u);
  REQUIRE(rc.model);
  CHECK(rc.model->n() == 6);
  CHECK(rc.model->initial_state().values().isApproxToConstant(0.5));
  CHECK_FALSE(rc.shock.node);
  CHECK(rc.shock.delta == 2.0);
  CHECK(rc.T == 12);
  CHECK(rc.mc.n_samples == 10000);
  CHECK(rc.benchmark.n_sim == 100);
}

TEST_CASE("config hash is key-order independent") {
  const auto a = nlohmann::json::parse(R"({"version": 1, "seed": 3})");
  const auto b = nlohmann::json::parse(R"({"seed": 3, "version": 1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 64);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("schema validator subset") {
  const auto schema = nlohmann::json::parse(R"({"type": "object", "properties": {
      "x": {"anyOf": [{"type": "integer", "minimum": 0}, {"enum": ["auto"]}]},
      "y": {"type": "array", "maxItems": 2, "items": {"type": "number", "exclusiveMinimum": 0}}}})");
  CHECK(validate_against_schema(nlohmann::json::parse(R"({"x": 3, "y": [1, 2]})"), schema).empty());
  CHECK(validate_against_schema(nlohmann::json::parse(R"({"x": "auto"})"), schema).empty());
  CHECK(validate_against_schema(nlohmann::json::parse(R"({"x": -1})"), schema).front().pointer == "/x");
  CHECK(validate_against_schema(nlohmann::json::parse(R"({"y": [1, 2, 3]})"), schema).front().pointer == "/y");
  CHECK(validate_against_schema(nlohmann::json::parse(R"({"y": [1, 0]})"), schema).front().pointer == "/y/1");
  CHECK(config_schema().at("$id") == "tnirf/config/v1");
}

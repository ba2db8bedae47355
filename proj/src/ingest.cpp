#include "tnirf/ingest.hpp"

#include "tnirf/errors.hpp"
#include "tnirf/rng.hpp"
#include "tnirf/sampling.hpp"
#include "tnirf/var_dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <map>
#include <set>
#include <sstream>

namespace tnirf {

namespace {

namespace chr = std::chrono;

int parse_int(std::string_view s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ValidationError("bad date field '" + std::string(s) + "'");
  return v;
}

chr::sys_days parse_date(const std::string& text) {
  std::string_view s(text);
  // Allow a trailing time part: 2014-01-06T10:00:00 or "2014-01-06 10:00".
  if (s.size() > 10 && (s[10] == 'T' || s[10] == ' ')) s = s.substr(0, 10);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw ValidationError("malformed date '" + text + "'");
  const chr::year_month_day ymd{chr::year{parse_int(s.substr(0, 4))},
                                chr::month{static_cast<unsigned>(parse_int(s.substr(5, 2)))},
                                chr::day{static_cast<unsigned>(parse_int(s.substr(8, 2)))}};
  if (!ymd.ok()) throw ValidationError("invalid calendar date '" + text + "'");
  return chr::sys_days{ymd};
}

chr::sys_days monday_of(chr::sys_days d) {
  const chr::weekday wd{d};
  return d - (wd - chr::Monday);
}

std::int64_t yyyymmdd(chr::sys_days d) {
  const chr::year_month_day ymd{d};
  return static_cast<std::int64_t>(static_cast<int>(ymd.year())) * 10000 +
         static_cast<std::int64_t>(static_cast<unsigned>(ymd.month())) * 100 +
         static_cast<std::int64_t>(static_cast<unsigned>(ymd.day()));
}

std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::int64_t week_start(const std::string& date) { return yyyymmdd(monday_of(parse_date(date))); }

std::vector<Transaction> read_transactions(std::istream& in, std::vector<RejectedRow>& rejects) {
  std::vector<Transaction> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split(line);
    if (!header) {
      if (f.size() < 3 || f[0] != "date" || f[1] != "lender" || f[2] != "borrower" ||
          (f.size() == 4 && f[3] != "amount") || f.size() > 4)
        throw ValidationError("transaction CSV header must be date,lender,borrower[,amount]");
      header = true;
      continue;
    }
    if (f.size() < 3 || f.size() > 4) {
      rejects.push_back({lineno, line, "expected 3 or 4 fields, got " + std::to_string(f.size())});
      continue;
    }
    if (f[1].empty() || f[2].empty()) {
      rejects.push_back({lineno, line, "empty lender or borrower id"});
      continue;
    }
    out.push_back({lineno, f[0], f[1], f[2]});
  }
  if (!header) throw ValidationError("transaction CSV is empty (missing header)");
  return out;
}

IngestResult aggregate_weekly(const std::vector<Transaction>& transactions) {
  IngestResult res;
  struct Arc {
    chr::sys_days week;
    std::string lender, borrower;
  };
  std::vector<Arc> arcs;
  std::set<std::string> ids;
  for (const auto& tx : transactions) {
    const std::string content = tx.date + "," + tx.lender + "," + tx.borrower;
    if (tx.lender.empty() || tx.borrower.empty()) {
      res.rejects.push_back({tx.line, content, "empty lender or borrower id"});
      continue;
    }
    if (tx.lender == tx.borrower) {
      res.rejects.push_back({tx.line, content, "lender equals borrower"});
      continue;
    }
    chr::sys_days day;
    try {
      day = parse_date(tx.date);
    } catch (const ValidationError& e) {
      res.rejects.push_back({tx.line, content, e.what()});
      continue;
    }
    arcs.push_back({monday_of(day), tx.lender, tx.borrower});
    ids.insert(tx.lender);
    ids.insert(tx.borrower);
  }
  res.accepted = arcs.size();
  if (arcs.empty()) throw ValidationError("no valid transactions to aggregate");

  const std::vector<std::string> labels(ids.begin(), ids.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < labels.size(); ++k) index[labels[k]] = k;

  chr::sys_days first = arcs.front().week, last = arcs.front().week;
  for (const auto& a : arcs) {
    first = std::min(first, a.week);
    last = std::max(last, a.week);
  }
  const auto weeks = static_cast<std::size_t>((last - first).count() / 7 + 1);
  std::vector<AdjacencySnapshot> snaps;
  for (std::size_t w = 0; w < weeks; ++w)
    snaps.emplace_back(labels.size(), true, yyyymmdd(first + chr::days{7 * static_cast<long>(w)}));
  for (const auto& a : arcs) {
    const auto w = static_cast<std::size_t>((a.week - first).count() / 7);
    snaps[w].set_arc(index[a.lender], index[a.borrower]);
  }
  res.network = TemporalNetwork(std::move(snaps), labels);
  return res;
}

IngestResult aggregate_weekly(std::istream& csv) {
  std::vector<RejectedRow> rejects;
  const auto tx = read_transactions(csv, rejects);
  IngestResult res = aggregate_weekly(tx);
  rejects.insert(rejects.end(), res.rejects.begin(), res.rejects.end());
  std::sort(rejects.begin(), rejects.end(), [](const auto& l, const auto& r) { return l.line < r.line; });
  res.rejects = std::move(rejects);
  return res;
}

namespace {

TemporalNetwork induce(const TemporalNetwork& net, const std::vector<std::size_t>& keep) {
  std::vector<AdjacencySnapshot> snaps;
  for (const auto& s : net.snapshots()) snaps.push_back(s.induced(keep));
  std::vector<std::string> labels;
  for (auto k : keep) labels.push_back(net.node_labels()[k]);
  return TemporalNetwork(std::move(snaps), std::move(labels));
}

}  // namespace

FilterResult filter_nodes(const TemporalNetwork& net, std::size_t degree_threshold, bool drop_isolated) {
  const std::size_t n = net.n();
  std::vector<std::size_t> cum_in(n, 0), cum_out(n, 0);
  for (const auto& s : net.snapshots()) {
    const Degrees d = degrees(s);
    for (std::size_t i = 0; i < n; ++i) {
      cum_in[i] += d.in[i];
      cum_out[i] += d.out[i];
    }
  }
  FilterResult res;
  for (std::size_t i = 0; i < n; ++i) {
    if (degree_threshold == 0 || (cum_in[i] > degree_threshold && cum_out[i] > degree_threshold))
      res.kept.push_back(i);
    else
      res.removed_by_degree.push_back(i);
  }

  if (drop_isolated) {
    for (bool changed = true; changed && !res.kept.empty();) {
      changed = false;
      std::vector<bool> isolated(res.kept.size(), false);
      for (const auto& s : net.snapshots()) {
        const AdjacencySnapshot sub = s.induced(res.kept);
        const Degrees d = degrees(sub);
        for (std::size_t k = 0; k < res.kept.size(); ++k)
          if (d.in[k] == 0 && d.out[k] == 0) isolated[k] = true;
      }
      std::vector<std::size_t> next;
      for (std::size_t k = 0; k < res.kept.size(); ++k) {
        if (isolated[k]) {
          res.removed_isolated.push_back(res.kept[k]);
          changed = true;
        } else {
          next.push_back(res.kept[k]);
        }
      }
      res.kept = std::move(next);
    }
  }
  if (res.kept.empty()) throw DomainError("node filter removed every node");
  res.network = induce(net, res.kept);
  return res;
}

namespace {

SynthEmid synth_attempt(std::uint64_t seed, std::uint64_t attempt) {
  constexpr auto n = static_cast<Eigen::Index>(kSynthBanks);
  constexpr Eigen::Index d = 2 * n;
  constexpr std::size_t burn_in = 50;
  Rng rng = make_stream(seed, {attempt});
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  Matrix B = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) B(i, j) = i == j ? 0.3 + 0.3 * u(rng) : 0.12 * z(rng);
  B *= 0.8 / spectral_radius(B);

  Vector target(d);
  for (Eigen::Index k = 0; k < d; ++k) target[k] = std::clamp(0.2 * z(rng), -0.3, 0.3);

  VarParams latent;
  latent.B = B;
  latent.mu = (Matrix::Identity(d, d) - B) * target;
  latent.Sigma = 0.05 * Matrix::Identity(d, d);

  const FitnessSeries path =
      simulate_var(latent, FitnessState(target, true), burn_in + kSynthWeeks, rng);
  SynthEmid out;
  out.latent.states.assign(path.states.begin() + static_cast<long>(burn_in), path.states.end());

  std::vector<AdjacencySnapshot> snaps;
  const auto start = chr::sys_days{chr::year{2014} / chr::January / 6};
  for (std::size_t w = 0; w < kSynthWeeks; ++w) {
    const std::int64_t ts = yyyymmdd(start + chr::days{7 * static_cast<long>(w)});
    snaps.push_back(sample_network(out.latent.states[w], true, rng));
    snaps.back().set_timestamp(ts);
    out.latent.times.push_back(ts);
  }
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < kSynthBanks; ++i) labels.push_back("bank" + std::to_string(i + 1));
  out.network = TemporalNetwork(std::move(snaps), std::move(labels));

  out.truth.latent = latent;
  out.truth.gamma = Vector::Zero(d);
  // Large-sample variance of a fitness MLE at link probability 1/2.
  out.truth.obs_noise = Vector::Constant(d, 1.0 / (0.25 * static_cast<double>(kSynthBanks - 1)));
  return out;
}

}  // namespace

SynthEmid synth_emid(std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    SynthEmid s = synth_attempt(seed, attempt);
    try {
      const FilterResult f = filter_nodes(s.network, kSynthThreshold, true);
      if (f.kept.size() == kSynthBanks) return s;
    } catch (const DomainError&) {
    }
  }
  throw NumericalError("synthetic generator failed to satisfy the node filter");
}

}  // namespace tnirf

#pragma once

#include "tnirf/core.hpp"
#include "tnirf/estimation.hpp"

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace tnirf {

struct Transaction {
  std::size_t line = 0;  // 1-based source line, 0 when not from a file
  std::string date;      // ISO-8601 date, optionally followed by a time
  std::string lender;
  std::string borrower;
};

struct RejectedRow {
  std::size_t line = 0;
  std::string content;
  std::string reason;
};

struct IngestResult {
  TemporalNetwork network;
  std::vector<RejectedRow> rejects;
  std::size_t accepted = 0;
};

/// Parses `date,lender,borrower[,amount]` CSV (header required). Rows that
/// cannot be parsed go to the rejects list; the amount column is ignored.
std::vector<Transaction> read_transactions(std::istream& in, std::vector<RejectedRow>& rejects);

/// One directed snapshot per calendar week (Monday start) from the first to
/// the last week seen, including empty weeks. Timestamps are the Monday as
/// YYYYMMDD; node labels are the sorted distinct ids. Repeated transactions
/// collapse to one arc. Bad dates and self-transactions are rejected.
IngestResult aggregate_weekly(const std::vector<Transaction>& transactions);
IngestResult aggregate_weekly(std::istream& csv);

/// Monday of the ISO week containing `date` as YYYYMMDD. Throws
/// ValidationError on malformed dates.
std::int64_t week_start(const std::string& date);

struct FilterResult {
  TemporalNetwork network;
  std::vector<std::size_t> kept;  // original indices of surviving nodes
  std::vector<std::size_t> removed_by_degree;
  std::vector<std::size_t> removed_isolated;
};

/// Keeps nodes whose cumulative in-degree and cumulative out-degree both
/// exceed `degree_threshold` (0 disables the degree rule). With `drop_isolated`, nodes that are isolated
/// in some snapshot of the induced network are removed repeatedly until no
/// snapshot has an isolated node. Throws DomainError when nothing survives.
FilterResult filter_nodes(const TemporalNetwork& net, std::size_t degree_threshold, bool drop_isolated);

/// Synthetic interbank-style panel: 8 banks, 40 weekly directed snapshots
/// driven by a full-B latent VAR on the 16 in/out fitnesses.
struct SynthEmid {
  TemporalNetwork network;
  StateSpaceParams truth;  // gamma = 0, obs_noise is a nominal MLE variance
  FitnessSeries latent;
};

inline constexpr std::size_t kSynthBanks = 8;
inline constexpr std::size_t kSynthWeeks = 40;
inline constexpr std::size_t kSynthThreshold = 100;

/// Deterministic in `seed`. The draw is repeated (with derived seeds) until
/// filter_nodes(kSynthThreshold, drop_isolated) removes nothing.
SynthEmid synth_emid(std::uint64_t seed);

}  // namespace tnirf

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tnirf {

using Rng = std::mt19937_64;

/// Independent stream for (master seed, path...) so results never depend on
/// how work is split across threads.
inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path = {}) {
  std::seed_seq::result_type words[2 + 2 * 8] = {};
  std::size_t k = 0;
  words[k++] = static_cast<std::uint32_t>(master);
  words[k++] = static_cast<std::uint32_t>(master >> 32);
  for (auto p : path) {
    if (k + 2 > std::size(words)) break;
    words[k++] = static_cast<std::uint32_t>(p);
    words[k++] = static_cast<std::uint32_t>(p >> 32);
  }
  std::seed_seq seq(words, words + k);
  return Rng(seq);
}

}  // namespace tnirf

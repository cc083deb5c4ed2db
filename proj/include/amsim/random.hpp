#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace amsim {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Stable across versions: run seeds are derived from it.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Folds a sequence of words into one seed, order-sensitive.
constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t w : words) {
    h = splitmix64(h ^ splitmix64(w));
  }
  return h;
}

// Stream ids used when forking a run's master seed.
namespace stream {
inline constexpr std::uint64_t payoff = 0;
inline constexpr std::uint64_t initial_wealth = 1;
inline constexpr std::uint64_t trader_base = 16;
}  // namespace stream

inline Rng fork_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
  return Rng{mix_seed({master_seed, stream_id})};
}

}  // namespace amsim

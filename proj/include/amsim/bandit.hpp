#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "amsim/random.hpp"

namespace amsim {

// Per-trader UCB1-style learner over a fixed number of arms.
struct BanditState {
  std::vector<double> q_estimates;
  std::vector<std::uint64_t> pull_counts;
  std::uint64_t step_counter{0};

  BanditState() = default;
  explicit BanditState(std::size_t arms) : q_estimates(arms, 0.0), pull_counts(arms, 0) {}

  [[nodiscard]] std::size_t arms() const noexcept { return q_estimates.size(); }
};

// Chooses the arm for this period and advances the step counter.
//
// Untried arms always win, picked uniformly among themselves. Once every arm
// has been tried the choice is argmax Q_k + c * sqrt(ln t / N_k) with exact
// ties broken uniformly from `rng`.
inline std::size_t select_arm(BanditState& state, double exploration, Rng& rng) {
  const std::size_t k = state.arms();
  if (k == 0) throw std::invalid_argument("select_arm: empty arm set");
  if (!(exploration >= 0.0)) throw std::invalid_argument("select_arm: exploration must be >= 0");

  ++state.step_counter;

  std::size_t untried = 0;
  for (std::uint64_t n : state.pull_counts) untried += (n == 0);
  if (untried > 0) {
    std::uniform_int_distribution<std::size_t> pick(0, untried - 1);
    std::size_t target = pick(rng);
    for (std::size_t a = 0; a < k; ++a) {
      if (state.pull_counts[a] != 0) continue;
      if (target == 0) return a;
      --target;
    }
  }

  const double log_t = std::log(static_cast<double>(state.step_counter));
  std::size_t best = 0;
  std::size_t ties = 0;
  double best_score = -INFINITY;
  for (std::size_t a = 0; a < k; ++a) {
    const double bonus = exploration * std::sqrt(log_t / static_cast<double>(state.pull_counts[a]));
    const double score = state.q_estimates[a] + bonus;
    if (score > best_score) {
      best_score = score;
      best = a;
      ties = 1;
    } else if (score == best_score) {
      ++ties;
    }
  }
  if (ties == 1) return best;

  std::uniform_int_distribution<std::size_t> pick(0, ties - 1);
  std::size_t target = pick(rng);
  for (std::size_t a = 0; a < k; ++a) {
    const double bonus = exploration * std::sqrt(log_t / static_cast<double>(state.pull_counts[a]));
    if (state.q_estimates[a] + bonus != best_score) continue;
    if (target == 0) return a;
    --target;
  }
  return best;
}

// Incremental running mean of rewards observed on `arm`.
inline void update_estimate(BanditState& state, std::size_t arm, double reward) {
  if (arm >= state.arms()) throw std::out_of_range("update_estimate: arm index out of range");
  const auto n = ++state.pull_counts[arm];
  state.q_estimates[arm] += (reward - state.q_estimates[arm]) / static_cast<double>(n);
}

}  // namespace amsim

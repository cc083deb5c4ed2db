#pragma once

#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "amsim/params.hpp"
#include "amsim/random.hpp"

namespace amsim {

// Risky payoff F_t and the history of realized per-period changes.
struct PayoffState {
  double current{30.0};
  std::vector<double> returns;
  double mean_return{0.0};
  // Left-fold sum of `returns`; keeps mean_return identical to a batch recompute.
  double return_sum{0.0};
  std::size_t redraws{0};

  static PayoffState initial(const MarketParams& p) {
    PayoffState s;
    s.current = p.initial_payoff;
    s.returns.reserve(p.horizon);
    return s;
  }
};

// Arithmetic mean; 0 for an empty history.
inline double mean_historical_return(std::span<const double> history) {
  if (history.empty()) return 0.0;
  return std::accumulate(history.begin(), history.end(), 0.0) / static_cast<double>(history.size());
}

// Multiplies F by (1 + r), r ~ Normal(mu, sigma). Draws with 1 + r <= 0 are
// rejected and counted. Returns the accepted r.
inline double advance_payoff(PayoffState& state, const MarketParams& p, Rng& rng) {
  double r = p.payoff_drift;
  if (p.payoff_vol > 0.0) {
    std::normal_distribution<double> dist(p.payoff_drift, p.payoff_vol);
    r = dist(rng);
    while (1.0 + r <= 0.0) {
      ++state.redraws;
      r = dist(rng);
    }
  }
  state.current *= (1.0 + r);
  state.returns.push_back(r);
  state.return_sum += r;
  state.mean_return = state.return_sum / static_cast<double>(state.returns.size());
  return r;
}

// Next-period payoff expectation. Informed traders see the realized F_t;
// uninformed extrapolate F_{t-1} with the mean of past changes.
inline double expected_payoff(Informedness inf, double payoff_current, double payoff_previous,
                              double mean_return) noexcept {
  if (inf == Informedness::informed) return payoff_current;
  return payoff_previous * (1.0 + mean_return);
}

inline double reservation_price(double expected, double risk_free) noexcept {
  return expected / (1.0 + risk_free);
}

}  // namespace amsim

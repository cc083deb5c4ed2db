#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace amsim {

// A step demand schedule: spend `budget` on the asset at any price up to `reservation`.
struct Order {
  std::size_t trader_id{0};
  double budget{0.0};
  double reservation{0.0};
};

struct ClearingResult {
  // Empty when the total budget is zero (no trade).
  std::optional<double> price;
  // Aligned with the input order sequence.
  std::vector<double> allocations;
  bool capped{false};
  // Positions (into the input sequence) of orders at or above the clearing level.
  std::vector<std::size_t> participants;

  [[nodiscard]] bool traded() const noexcept { return price.has_value(); }
};

inline void validate_order(const Order& o) {
  if (!(o.budget >= 0.0) || !std::isfinite(o.budget)) {
    throw std::invalid_argument("invalid order for trader " + std::to_string(o.trader_id) +
                                ": budget must be finite and >= 0");
  }
  if (!(o.reservation > 0.0) || !std::isfinite(o.reservation)) {
    throw std::invalid_argument("invalid order for trader " + std::to_string(o.trader_id) +
                                ": reservation must be finite and > 0");
  }
}

// Shares demanded at price P. Boundary inclusive: an order participates at its own reservation.
inline double demand_at_price(std::span<const Order> orders, double price) {
  if (!(price > 0.0)) throw std::invalid_argument("demand_at_price: price must be > 0");
  double money = 0.0;
  for (const Order& o : orders) {
    if (o.reservation >= price) money += o.budget;
  }
  return money / price;
}

// Walrasian clearing of fixed supply `shares` against step demand schedules.
//
// Reservation levels are scanned from the top. At level k with prefix budget
// S_k the uncapped candidate is S_k / N. If the candidate exceeds the level
// itself the price caps there and the prefix set is rationed pro rata to
// budgets. If it lies above the next level down (or k is the last level) it
// is the clearing price and every participant spends their whole budget.
inline ClearingResult clear_market(std::span<const Order> orders, double shares) {
  if (!(shares > 0.0)) throw std::invalid_argument("clear_market: shares must be > 0");
  for (const Order& o : orders) validate_order(o);

  ClearingResult out;
  out.allocations.assign(orders.size(), 0.0);

  std::vector<std::size_t> by_level(orders.size());
  std::iota(by_level.begin(), by_level.end(), std::size_t{0});
  std::stable_sort(by_level.begin(), by_level.end(), [&](std::size_t a, std::size_t b) {
    return orders[a].reservation > orders[b].reservation;
  });

  double prefix = 0.0;
  std::size_t i = 0;
  while (i < by_level.size()) {
    const double level = orders[by_level[i]].reservation;
    std::size_t j = i;
    while (j < by_level.size() && orders[by_level[j]].reservation == level) {
      prefix += orders[by_level[j]].budget;
      ++j;
    }
    const bool last = j == by_level.size();
    const double candidate = prefix / shares;

    if (candidate > level) {
      out.price = level;
      out.capped = true;
      for (std::size_t k = 0; k < j; ++k) {
        const std::size_t pos = by_level[k];
        out.allocations[pos] = shares * (orders[pos].budget / prefix);
        out.participants.push_back(pos);
      }
      break;
    }
    if (prefix > 0.0 && (last || candidate > orders[by_level[j]].reservation)) {
      out.price = candidate;
      for (std::size_t k = 0; k < j; ++k) {
        const std::size_t pos = by_level[k];
        out.allocations[pos] = orders[pos].budget / candidate;
        out.participants.push_back(pos);
      }
      break;
    }
    i = j;
  }
  std::sort(out.participants.begin(), out.participants.end());
  return out;
}

inline ClearingResult clear_market(const std::vector<Order>& orders, double shares) {
  return clear_market(std::span<const Order>(orders), shares);
}

// Closed-form profit of trader A in a two-trader, equal-reservation, uncapped
// market with r_f = 0: F * N * a / (a + b) - a.
inline double two_trader_profit(double payoff, double shares, double committed_a, double committed_b) {
  const double total = committed_a + committed_b;
  if (!(total > 0.0)) throw std::domain_error("two_trader_profit: both committed budgets are zero");
  return payoff * shares * committed_a / total - committed_a;
}

}  // namespace amsim

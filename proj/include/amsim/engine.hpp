#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "amsim/auction.hpp"
#include "amsim/bandit.hpp"
#include "amsim/params.hpp"
#include "amsim/payoff.hpp"
#include "amsim/random.hpp"
#include "amsim/stats.hpp"

namespace amsim {

using ArmId = std::uint16_t;

struct TraderState {
  std::size_t trader_id{0};
  double wealth{0.0};
  BanditState bandit;
  std::optional<std::size_t> last_arm;
  Rng rng;
};

// One trader's period: arm played, money committed, shares received, wealth after settlement.
struct TraderTick {
  ArmId arm{0};
  double budget{0.0};
  double allocation{0.0};
  double wealth{0.0};
};

struct StepRecord {
  std::size_t t{0};  // 1-based period index
  double payoff{0.0};
  double payoff_previous{0.0};
  double return_rate{0.0};
  // Mean past change seen by uninformed traders this period (excludes return_rate).
  double mean_return_prior{0.0};
  double reservation_informed{0.0};
  double reservation_uninformed{0.0};
  std::optional<double> price;
  bool capped{false};
  std::optional<double> epsilon;
  std::optional<double> price_alpha_min;
  std::optional<double> price_alpha_max;
  std::optional<double> delta;
  std::vector<TraderTick> traders;
  double wealth_informed{0.0};
  double wealth_uninformed{0.0};
  std::size_t n_informed{0};
  std::size_t n_alpha1{0};

  [[nodiscard]] double wealth_total() const noexcept { return wealth_informed + wealth_uninformed; }
};

struct RunLog {
  MarketParams params;
  std::uint64_t seed{0};
  std::vector<Strategy> strategies;
  std::vector<double> initial_wealth;
  std::vector<StepRecord> steps;
  // choices[i][t] is the arm trader i played in period t + 1.
  std::vector<std::vector<ArmId>> choices;
  std::size_t payoff_redraws{0};

  // Wealth trader `i` held entering step `step_index` (0-based), before any cost.
  [[nodiscard]] double wealth_before(std::size_t step_index, std::size_t i) const {
    return step_index == 0 ? initial_wealth.at(i) : steps.at(step_index - 1).traders.at(i).wealth;
  }
};

// Next-period wealth: shares pay F, unspent money earns r_f. Informed traders
// pay C first; wealth is floored at zero on both legs.
inline double settle_trader(double wealth_pre, bool informed, double info_cost, double budget, double shares,
                            double price, double payoff, double risk_free) {
  if (!(wealth_pre >= 0.0)) throw std::invalid_argument("settle_trader: wealth_pre must be >= 0");
  const double spend = shares * price;
  const double slack = std::max(1e-9, 1e-12 * budget);
  if (spend > budget + slack) {
    throw std::logic_error("settle_trader: spend " + std::to_string(spend) + " exceeds budget " +
                           std::to_string(budget));
  }
  const double post_cost = std::max(wealth_pre - (informed ? info_cost : 0.0), 0.0);
  return std::max(shares * payoff + (post_cost - spend) * (1.0 + risk_free), 0.0);
}

class Simulation {
public:
  // Wealths drawn uniformly on (low, high] from the run's wealth stream.
  explicit Simulation(MarketParams params) : params_(std::move(params)) {
    params_.validate();
    Rng wealth_rng = fork_stream(params_.master_seed, stream::initial_wealth);
    std::uniform_real_distribution<double> u(params_.initial_wealth_low, params_.initial_wealth_high);
    std::vector<double> w(params_.num_traders);
    for (double& x : w) x = params_.initial_wealth_low + params_.initial_wealth_high - u(wealth_rng);
    init(std::move(w));
  }

  Simulation(MarketParams params, std::vector<double> initial_wealth) : params_(std::move(params)) {
    params_.validate();
    if (initial_wealth.size() != params_.num_traders) {
      throw std::invalid_argument("Simulation: initial_wealth size must equal num_traders");
    }
    for (double w : initial_wealth) {
      if (!(w >= 0.0)) throw std::invalid_argument("Simulation: initial wealth must be >= 0");
    }
    init(std::move(initial_wealth));
  }

  [[nodiscard]] const MarketParams& params() const noexcept { return params_; }
  [[nodiscard]] const std::vector<Strategy>& strategies() const noexcept { return strategies_; }
  [[nodiscard]] const std::vector<TraderState>& traders() const noexcept { return traders_; }
  [[nodiscard]] const PayoffState& payoff() const noexcept { return payoff_; }
  [[nodiscard]] const std::vector<double>& initial_wealth() const noexcept { return initial_wealth_; }
  [[nodiscard]] std::size_t period() const noexcept { return period_; }

  StepRecord step() {
    const double payoff_prev = payoff_.current;
    const double rbar = payoff_.mean_return;
    // The history append inside advance_payoff is only read from next period on.
    const double r = advance_payoff(payoff_, params_, payoff_rng_);
    const double payoff_now = payoff_.current;
    ++period_;

    StepRecord rec;
    rec.t = period_;
    rec.payoff = payoff_now;
    rec.payoff_previous = payoff_prev;
    rec.return_rate = r;
    rec.mean_return_prior = rbar;
    rec.reservation_informed = reservation_price(
        expected_payoff(Informedness::informed, payoff_now, payoff_prev, rbar), params_.risk_free);
    rec.reservation_uninformed = reservation_price(
        expected_payoff(Informedness::uninformed, payoff_now, payoff_prev, rbar), params_.risk_free);

    const std::size_t m = traders_.size();
    const double amin = params_.alpha_min();
    const double amax = params_.alpha_max();
    for (std::size_t i = 0; i < m; ++i) {
      TraderState& tr = traders_[i];
      const std::size_t arm = select_arm(tr.bandit, params_.exploration, tr.rng);
      tr.last_arm = arm;
      const Strategy& s = strategies_[arm];
      const double post_cost = std::max(tr.wealth - (s.informed() ? params_.info_cost : 0.0), 0.0);
      const double res = s.informed() ? rec.reservation_informed : rec.reservation_uninformed;
      orders_[i] = {i, s.alpha * post_cost, res};
      orders_min_[i] = {i, amin * post_cost, res};
      orders_max_[i] = {i, amax * post_cost, res};
    }

    const ClearingResult cleared = clear_market(orders_, params_.num_shares);
    rec.price = cleared.price;
    rec.capped = cleared.capped;
    rec.price_alpha_min = clear_market(orders_min_, params_.num_shares).price;
    rec.price_alpha_max = clear_market(orders_max_, params_.num_shares).price;
    rec.epsilon = mispricing(rec.price, payoff_now, params_.risk_free);
    rec.delta = delta_stat(rec.price, rec.price_alpha_min, rec.price_alpha_max);

    rec.traders.resize(m);
    const double price = cleared.price.value_or(0.0);
    for (std::size_t i = 0; i < m; ++i) {
      TraderState& tr = traders_[i];
      const std::size_t arm = *tr.last_arm;
      const Strategy& s = strategies_[arm];
      const double before = tr.wealth;
      const double q = cleared.allocations[i];
      const double after = settle_trader(before, s.informed(), params_.info_cost, orders_[i].budget, q, price,
                                         payoff_now, params_.risk_free);
      const double reward = before > 0.0 ? (after - before) / before : 0.0;
      update_estimate(tr.bandit, arm, reward);
      tr.wealth = after;

      rec.traders[i] = {static_cast<ArmId>(arm), orders_[i].budget, q, after};
      if (s.informed()) {
        rec.wealth_informed += after;
        ++rec.n_informed;
      } else {
        rec.wealth_uninformed += after;
      }
      if (s.alpha == 1.0) ++rec.n_alpha1;
    }
    return rec;
  }

  RunLog run() {
    RunLog log;
    log.params = params_;
    log.seed = params_.master_seed;
    log.strategies = strategies_;
    log.initial_wealth = initial_wealth_;
    log.steps.reserve(params_.horizon);
    log.choices.assign(traders_.size(), {});
    for (auto& c : log.choices) c.reserve(params_.horizon);
    for (std::size_t t = 0; t < params_.horizon; ++t) {
      log.steps.push_back(step());
      const auto& rec = log.steps.back();
      for (std::size_t i = 0; i < rec.traders.size(); ++i) log.choices[i].push_back(rec.traders[i].arm);
    }
    log.payoff_redraws = payoff_.redraws;
    return log;
  }

private:
  void init(std::vector<double> wealth) {
    strategies_ = strategy_set(params_);
    payoff_ = PayoffState::initial(params_);
    payoff_rng_ = fork_stream(params_.master_seed, stream::payoff);
    initial_wealth_ = std::move(wealth);
    traders_.clear();
    traders_.reserve(params_.num_traders);
    for (std::size_t i = 0; i < params_.num_traders; ++i) {
      traders_.push_back({i, initial_wealth_[i], BanditState(strategies_.size()), std::nullopt,
                          fork_stream(params_.master_seed, stream::trader_base + i)});
    }
    orders_.assign(params_.num_traders, {});
    orders_min_.assign(params_.num_traders, {});
    orders_max_.assign(params_.num_traders, {});
  }

  MarketParams params_;
  std::vector<Strategy> strategies_;
  PayoffState payoff_;
  Rng payoff_rng_;
  std::vector<double> initial_wealth_;
  std::vector<TraderState> traders_;
  std::size_t period_{0};
  std::vector<Order> orders_;
  std::vector<Order> orders_min_;
  std::vector<Order> orders_max_;
};

inline RunLog run_simulation(MarketParams params, std::uint64_t seed) {
  params.master_seed = seed;
  return Simulation(std::move(params)).run();
}

}  // namespace amsim

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "amsim/engine.hpp"
#include "amsim/io.hpp"
#include "amsim/runner.hpp"

using namespace amsim;

namespace {
MarketParams small(std::size_t horizon, double cost, Mode mode, std::uint64_t seed) {
  MarketParams p;
  p.horizon = horizon;
  p.info_cost = cost;
  p.mode = mode;
  p.master_seed = seed;
  return p;
}
}  // namespace

TEST(Settle, UncappedProfit) {
  // W' = 100, B = 50 at P = 25, F = 30: 2 shares pay 60, 50 cash stays.
  EXPECT_DOUBLE_EQ(settle_trader(100, false, 0, 50, 2, 25, 30, 0), 110);
}

TEST(Settle, FairPriceLeavesWealthUnchanged) {
  for (double alpha : {0.01, 0.5, 1.0}) {
    const double b = alpha * 100;
    EXPECT_DOUBLE_EQ(settle_trader(100, true, 0, b, b / 30, 30, 30, 0), 100);
  }
}

TEST(Settle, RationedResidualEarnsRiskFree) {
  EXPECT_DOUBLE_EQ(settle_trader(100, false, 0, 50, 1, 30, 33, 0), 103);
  // Spent fraction replays the uncapped formula: 30 of budget buys 1 share, 70 idle.
  EXPECT_DOUBLE_EQ(settle_trader(100, false, 0, 50, 1, 30, 33, 0.01), 33 + 70 * 1.01);
}

TEST(Settle, CostChargedOnlyToInformed) {
  EXPECT_DOUBLE_EQ(settle_trader(100, true, 10, 0, 0, 30, 30, 0), 90);
  EXPECT_DOUBLE_EQ(settle_trader(100, false, 10, 0, 0, 30, 30, 0), 100);
  EXPECT_EQ(settle_trader(5, true, 10, 0, 0, 30, 30, 0), 0);
}

TEST(Settle, OverspendRejected) {
  EXPECT_THROW(settle_trader(100, false, 0, 50, 2, 30, 30, 0), std::logic_error);
  EXPECT_THROW(settle_trader(-1, false, 0, 0, 0, 30, 30, 0), std::invalid_argument);
}

TEST(Engine, SingleTraderCapsAtFairPrice) {
  MarketParams p;
  p.num_traders = 1;
  p.mode = Mode::competitive;
  p.risk_free = 0;
  p.payoff_drift = 0;
  p.payoff_vol = 0;
  p.horizon = 1;
  Simulation sim(p, {40000});
  const StepRecord r = sim.step();
  EXPECT_EQ(r.payoff, 30);
  ASSERT_TRUE(r.price);
  EXPECT_EQ(*r.price, 30);
  EXPECT_TRUE(r.capped);
  EXPECT_DOUBLE_EQ(r.traders[0].allocation, 1000);
  EXPECT_DOUBLE_EQ(r.traders[0].wealth, 40000);
  EXPECT_EQ(*r.epsilon, 0);
}

TEST(Engine, NoTradersRejectedAtConstruction) {
  MarketParams p;
  p.num_traders = 0;
  EXPECT_THROW(Simulation{p}, std::invalid_argument);
  EXPECT_THROW(Simulation(p, {}), std::invalid_argument);
}

TEST(Engine, InitialWealthInRange) {
  Simulation sim(small(1, 0, Mode::strategic, 3));
  for (double w : sim.initial_wealth()) {
    EXPECT_GT(w, 0.0);
    EXPECT_LE(w, 1000.0);
  }
}

TEST(Engine, SingleStepHorizon) {
  const RunLog log = run_simulation(small(1, 0, Mode::strategic, 1), 1);
  EXPECT_EQ(log.steps.size(), 1u);
  EXPECT_EQ(log.steps[0].t, 1u);
  EXPECT_EQ(log.choices.size(), 100u);
  EXPECT_EQ(log.choices[0].size(), 1u);
}

TEST(Engine, CompetitiveModeOnlyFullWealthArms) {
  const RunLog log = run_simulation(small(50, 0, Mode::competitive, 5), 5);
  for (const auto& s : log.steps) {
    EXPECT_EQ(s.n_alpha1, 100u);
    for (const auto& tk : s.traders) EXPECT_EQ(log.strategies[tk.arm].alpha, 1.0);
  }
}

TEST(Engine, DeterministicAcrossExecutions) {
  const auto a = run_simulation(small(200, 2, Mode::strategic, 8), 8);
  const auto b = run_simulation(small(200, 2, Mode::strategic, 8), 8);
  EXPECT_EQ(timeseries_csv(a), timeseries_csv(b));
  EXPECT_EQ(a.choices, b.choices);
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    for (std::size_t i = 0; i < 100; ++i) ASSERT_EQ(a.steps[t].traders[i].wealth, b.steps[t].traders[i].wealth);
  }
  const auto c = run_simulation(small(200, 2, Mode::strategic, 9), 9);
  EXPECT_NE(timeseries_csv(a), timeseries_csv(c));
}

TEST(Engine, UninformedUsePriorMeanOnly) {
  const auto log = run_simulation(small(30, 0, Mode::strategic, 4), 4);
  double sum = 0.0;
  for (std::size_t t = 0; t < log.steps.size(); ++t) {
    const auto& s = log.steps[t];
    const double rbar = t == 0 ? 0.0 : sum / double(t);
    EXPECT_DOUBLE_EQ(s.mean_return_prior, rbar);
    EXPECT_DOUBLE_EQ(s.reservation_uninformed, s.payoff_previous * (1 + rbar) / (1 + log.params.risk_free));
    EXPECT_DOUBLE_EQ(s.reservation_informed, s.payoff / (1 + log.params.risk_free));
    sum += s.return_rate;
  }
}

class EngineInvariants : public ::testing::TestWithParam<std::tuple<Mode, double>> {};

TEST_P(EngineInvariants, HoldEveryPeriod) {
  const auto [mode, cost] = GetParam();
  const RunLog log = run_simulation(small(600, cost, mode, 17), 17);
  const auto& p = log.params;
  for (std::size_t t = 0; t < log.steps.size(); ++t) {
    const auto& s = log.steps[t];
    ASSERT_TRUE(s.price);
    ASSERT_GE(*s.epsilon, 0.0);
    ASSERT_LE(*s.price_alpha_min, *s.price);
    ASSERT_LE(*s.price, *s.price_alpha_max);
    if (s.delta) {
      ASSERT_GE(*s.delta, 0.0);
      ASSERT_LE(*s.delta, 1.0);
    }
    double q = 0.0, lhs = 0.0, post = 0.0;
    for (std::size_t i = 0; i < s.traders.size(); ++i) {
      const auto& tk = s.traders[i];
      ASSERT_GE(tk.wealth, 0.0);
      q += tk.allocation;
      lhs += tk.wealth;
      const bool inf = log.strategies[tk.arm].informed();
      post += std::max(log.wealth_before(t, i) - (inf ? p.info_cost : 0.0), 0.0);
    }
    ASSERT_NEAR(q, p.num_shares, 1e-9 * p.num_shares);
    // Aggregate trading profit is N (F - P (1 + r_f)) on top of idle cash growth.
    const double rhs = post * (1 + p.risk_free) + p.num_shares * (s.payoff - *s.price * (1 + p.risk_free));
    ASSERT_NEAR(lhs, rhs, 1e-9 * rhs);
  }
}

INSTANTIATE_TEST_SUITE_P(Grid, EngineInvariants,
                         ::testing::Combine(::testing::Values(Mode::strategic, Mode::competitive),
                                            ::testing::Values(0.0, 0.06, 2.0, 10.0)));

TEST(Engine, AllInformedCompetitivePricesAtDiscountedPayoff) {
  std::size_t found = 0;
  for (std::uint64_t seed = 0; seed < 10 && found == 0; ++seed) {
    const RunLog log = run_simulation(small(300, 0, Mode::competitive, seed), seed);
    for (std::size_t t = 0; t < log.steps.size(); ++t) {
      const auto& s = log.steps[t];
      if (s.n_informed != s.traders.size()) continue;
      double budget = 0.0;
      for (const auto& tk : s.traders) budget += tk.budget;
      if (budget < log.params.num_shares * s.reservation_informed) continue;
      ++found;
      EXPECT_EQ(*s.price, s.reservation_informed);
      EXPECT_EQ(*s.epsilon, 0.0);
    }
  }
  EXPECT_GT(found, 0u);
}

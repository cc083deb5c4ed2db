#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "amsim/auction.hpp"
#include "oracles.hpp"

using namespace amsim;
using amsim::testing::brute_force_price;
using amsim::testing::random_instance;
using amsim::testing::rel_err;

namespace {
double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }
}  // namespace

TEST(Auction, DemandAtPrice) {
  const std::vector<Order> o{{0, 25000, 30}, {1, 10000, 20}};
  EXPECT_DOUBLE_EQ(demand_at_price(o, 25), 1000);
  EXPECT_DOUBLE_EQ(demand_at_price(o, 20), 1750);
  EXPECT_EQ(demand_at_price(o, 31), 0);
  EXPECT_THROW(demand_at_price(o, 0), std::invalid_argument);
}

TEST(Auction, EqualReservationsUncapped) {
  const auto r = clear_market({{0, 10000, 30}, {1, 10000, 30}}, 1000);
  ASSERT_TRUE(r.traded());
  EXPECT_DOUBLE_EQ(*r.price, 20);
  EXPECT_DOUBLE_EQ(r.allocations[0], 500);
  EXPECT_DOUBLE_EQ(r.allocations[1], 500);
  EXPECT_FALSE(r.capped);
}

TEST(Auction, CandidateBetweenLevels) {
  const auto r = clear_market({{0, 25000, 30}, {1, 10000, 20}}, 1000);
  EXPECT_DOUBLE_EQ(*r.price, 25);
  EXPECT_DOUBLE_EQ(r.allocations[0], 1000);
  EXPECT_EQ(r.allocations[1], 0);
  EXPECT_FALSE(r.capped);
  EXPECT_EQ(r.participants, (std::vector<std::size_t>{0}));
}

TEST(Auction, CappedAtLowerLevelWithRationing) {
  const auto r = clear_market({{0, 15000, 30}, {1, 10000, 20}}, 1000);
  EXPECT_DOUBLE_EQ(*r.price, 20);
  EXPECT_DOUBLE_EQ(r.allocations[0], 600);
  EXPECT_DOUBLE_EQ(r.allocations[1], 400);
  EXPECT_TRUE(r.capped);
}

TEST(Auction, CappedAtTopLevel) {
  const auto r = clear_market({{0, 40000, 30}}, 1000);
  EXPECT_DOUBLE_EQ(*r.price, 30);
  EXPECT_DOUBLE_EQ(r.allocations[0], 1000);
  EXPECT_TRUE(r.capped);
}

TEST(Auction, ZeroBudgetsGiveNoTrade) {
  const auto r = clear_market({{0, 0, 30}, {1, 0, 20}}, 1000);
  EXPECT_FALSE(r.traded());
  EXPECT_EQ(sum(r.allocations), 0);
  EXPECT_TRUE(r.participants.empty());
}

TEST(Auction, BoundaryParticipation) {
  // Candidate equals the lower level exactly: that level joins and rationing applies.
  const auto r = clear_market({{0, 20000, 30}, {1, 10000, 20}}, 1000);
  EXPECT_DOUBLE_EQ(*r.price, 20);
  EXPECT_TRUE(r.capped);
  EXPECT_DOUBLE_EQ(sum(r.allocations), 1000);
  EXPECT_GT(r.allocations[1], 0.0);
}

TEST(Auction, InvalidOrdersRejected) {
  EXPECT_THROW(clear_market({{0, -1, 30}}, 1000), std::invalid_argument);
  EXPECT_THROW(clear_market({{0, 1, 0}}, 1000), std::invalid_argument);
  EXPECT_THROW(clear_market({{0, 1, 30}}, 0), std::invalid_argument);
}

TEST(Auction, TwoTraderProfit) {
  EXPECT_DOUBLE_EQ(two_trader_profit(30, 1000, 15000, 15000), 0);
  EXPECT_DOUBLE_EQ(two_trader_profit(30, 1000, 10000, 10000), 5000);
  EXPECT_NEAR(two_trader_profit(30, 1000, 10000, 1), 20000 - 30000.0 / 10001, 1e-9);
  EXPECT_THROW(two_trader_profit(30, 1000, 0, 0), std::domain_error);
}

TEST(Auction, TwoTraderProfitMatchesClearing) {
  // q = 500 at P = 20 gives (30 - 20) * 500.
  const auto r = clear_market({{0, 10000, 100}, {1, 10000, 100}}, 1000);
  EXPECT_DOUBLE_EQ((30 - *r.price) * r.allocations[0], two_trader_profit(30, 1000, 10000, 10000));
}

TEST(AuctionProperty, MatchesBruteForceOracle) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 1000; ++n) {
    const auto inst = random_instance(rng);
    const auto r = clear_market(inst.orders, inst.shares);
    const auto oracle = brute_force_price(inst.orders, inst.shares);
    ASSERT_EQ(r.traded(), oracle.has_value());
    if (!oracle) continue;
    ASSERT_LE(rel_err(*r.price, *oracle), 1e-9) << "instance " << n;
    ASSERT_LE(rel_err(sum(r.allocations), inst.shares), 1e-9) << "instance " << n;
  }
}

TEST(AuctionProperty, ParticipationAndFullSpend) {
  std::mt19937_64 rng(12);
  for (int n = 0; n < 1000; ++n) {
    const auto inst = random_instance(rng);
    const auto r = clear_market(inst.orders, inst.shares);
    if (!r.traded()) continue;
    for (std::size_t i = 0; i < inst.orders.size(); ++i) {
      const auto& o = inst.orders[i];
      if (o.reservation < *r.price) {
        ASSERT_EQ(r.allocations[i], 0.0);
      }
      ASSERT_LE(r.allocations[i] * *r.price, o.budget * (1 + 1e-12) + 1e-9);
      if (!r.capped && o.reservation >= *r.price) {
        ASSERT_NEAR(r.allocations[i] * *r.price, o.budget, 1e-9 * std::max(1.0, o.budget));
      }
    }
  }
}

TEST(AuctionProperty, MonotoneInEachBudget) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> factor(0.0, 3.0);
  for (int n = 0; n < 2000; ++n) {
    auto inst = random_instance(rng);
    const auto base = clear_market(inst.orders, inst.shares);
    std::uniform_int_distribution<std::size_t> pick(0, inst.orders.size() - 1);
    const std::size_t k = pick(rng);
    const double f = factor(rng);
    inst.orders[k].budget *= f;
    const auto moved = clear_market(inst.orders, inst.shares);
    const double p0 = base.price.value_or(0.0), p1 = moved.price.value_or(0.0);
    if (f >= 1.0) {
      ASSERT_GE(p1, p0 * (1 - 1e-12));
    } else {
      ASSERT_LE(p1, p0 * (1 + 1e-12));
    }
  }
}

TEST(AuctionProperty, ScaleInvariance) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> lambda(0.01, 100.0);
  for (int n = 0; n < 500; ++n) {
    auto inst = random_instance(rng);
    const auto base = clear_market(inst.orders, inst.shares);
    const double l = lambda(rng);
    for (auto& o : inst.orders) o.budget *= l;
    const auto scaled = clear_market(inst.orders, inst.shares * l);
    ASSERT_EQ(base.traded(), scaled.traded());
    if (!base.traded()) continue;
    ASSERT_LE(rel_err(*scaled.price, *base.price), 1e-9);
    for (std::size_t i = 0; i < inst.orders.size(); ++i) {
      ASSERT_NEAR(scaled.allocations[i], l * base.allocations[i], 1e-9 * std::max(1.0, l * base.allocations[i]));
    }
  }
}

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "amsim/auction.hpp"
#include "amsim/engine.hpp"
#include "amsim/params.hpp"
#include "amsim/stats.hpp"

namespace amsim {

struct WealthSplit {
  std::vector<double> informed;
  std::vector<double> uninformed;
  std::vector<double> total;
};

// Per-period aggregate wealth, split by the arm each trader played that period.
inline WealthSplit wealth_split(std::span<const StepRecord> steps) {
  WealthSplit out;
  out.informed.reserve(steps.size());
  out.uninformed.reserve(steps.size());
  out.total.reserve(steps.size());
  for (const auto& s : steps) {
    out.informed.push_back(s.wealth_informed);
    out.uninformed.push_back(s.wealth_uninformed);
    out.total.push_back(s.wealth_informed + s.wealth_uninformed);
  }
  return out;
}

struct ScatterPoint {
  std::size_t informed_rounds{0};
  std::optional<double> frac_alpha1_informed;
  std::size_t uninformed_rounds{0};
  std::optional<double> frac_alpha1_uninformed;

  friend bool operator==(const ScatterPoint&, const ScatterPoint&) = default;
};

inline ScatterPoint strategy_scatter(std::span<const ArmId> history, std::span<const Strategy> arms) {
  ScatterPoint p;
  std::size_t inf_a1 = 0, uninf_a1 = 0;
  for (ArmId a : history) {
    const Strategy& s = arms[a];
    if (s.informed()) {
      ++p.informed_rounds;
      inf_a1 += (s.alpha == 1.0);
    } else {
      ++p.uninformed_rounds;
      uninf_a1 += (s.alpha == 1.0);
    }
  }
  if (p.informed_rounds > 0) p.frac_alpha1_informed = double(inf_a1) / double(p.informed_rounds);
  if (p.uninformed_rounds > 0) p.frac_alpha1_uninformed = double(uninf_a1) / double(p.uninformed_rounds);
  return p;
}

inline std::vector<ScatterPoint> strategy_scatter(const RunLog& log) {
  std::vector<ScatterPoint> out;
  out.reserve(log.choices.size());
  for (const auto& h : log.choices) out.push_back(strategy_scatter(h, log.strategies));
  return out;
}

struct ModalArm {
  ArmId arm{0};
  std::size_t count{0};
};

// Most frequent arm in a window; lowest index wins ties.
inline ModalArm modal_arm(std::span<const ArmId> window) {
  std::vector<std::size_t> counts;
  for (ArmId a : window) {
    if (a >= counts.size()) counts.resize(a + 1, 0);
    ++counts[a];
  }
  ModalArm best;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a] > best.count) best = {static_cast<ArmId>(a), counts[a]};
  }
  return best;
}

inline constexpr std::size_t kStickinessWindow = 300;
inline constexpr double kStickinessThreshold = 0.8;

// Traders whose modal arm over the trailing min(window, t) choices ending at
// period t (1-based) has frequency >= threshold.
inline std::size_t stickiness_count(std::span<const std::vector<ArmId>> choices, std::size_t t,
                                    std::size_t window = kStickinessWindow,
                                    double threshold = kStickinessThreshold) {
  if (t < 1) throw std::invalid_argument("stickiness_count: t must be >= 1");
  if (window < 1) throw std::invalid_argument("stickiness_count: window must be >= 1");
  std::size_t n = 0;
  for (const auto& h : choices) {
    if (t > h.size()) throw std::out_of_range("stickiness_count: t beyond recorded history");
    const std::size_t len = std::min(window, t);
    const auto mode = modal_arm(std::span<const ArmId>(h).subspan(t - len, len));
    n += double(mode.count) >= threshold * double(len);
  }
  return n;
}

// stickiness_count for every t = 1..T with sliding counts.
inline std::vector<std::size_t> stickiness_series(std::span<const std::vector<ArmId>> choices,
                                                  std::size_t window = kStickinessWindow,
                                                  double threshold = kStickinessThreshold) {
  if (window < 1) throw std::invalid_argument("stickiness_series: window must be >= 1");
  if (choices.empty()) return {};
  const std::size_t horizon = choices.front().size();
  std::vector<std::size_t> out(horizon, 0);
  std::vector<std::size_t> counts;
  for (const auto& h : choices) {
    if (h.size() != horizon) throw std::invalid_argument("stickiness_series: ragged choice histories");
    counts.assign(counts.size(), 0);
    for (std::size_t t = 0; t < horizon; ++t) {
      if (h[t] >= counts.size()) counts.resize(h[t] + 1, 0);
      ++counts[h[t]];
      if (t >= window) --counts[h[t - window]];
      const std::size_t len = std::min(window, t + 1);
      const std::size_t top = *std::max_element(counts.begin(), counts.end());
      out[t] += double(top) >= threshold * double(len);
    }
  }
  return out;
}

// Everything needed to replay one trader's alternatives in a recorded period.
struct PeriodView {
  const MarketParams* params{nullptr};
  std::span<const Strategy> arms;
  double payoff{0.0};
  double reservation_informed{0.0};
  double reservation_uninformed{0.0};
  std::span<const TraderTick> ticks;
};

inline PeriodView period_view(const RunLog& log, std::size_t step_index) {
  const StepRecord& s = log.steps.at(step_index);
  return {&log.params, log.strategies, s.payoff, s.reservation_informed, s.reservation_uninformed, s.traders};
}

struct BestResponse {
  std::size_t best_arm{0};
  // Wealth after settlement had the trader played each arm, others unchanged.
  std::vector<double> next_wealth;
  // next_wealth minus the wealth held before the period.
  std::vector<double> profit;
  bool actual_is_optimal{false};
};

inline constexpr double kOptimalityTolerance = 1e-12;

// Replays trader `i` under every arm against the others' realized orders.
// The others are aggregated per reservation level, which leaves the clearing
// outcome unchanged.
inline BestResponse best_response_strategy(const PeriodView& view, std::size_t i, double wealth_before) {
  const MarketParams& p = *view.params;
  if (i >= view.ticks.size()) throw std::out_of_range("best_response_strategy: trader index out of range");

  double others_informed = 0.0, others_uninformed = 0.0;
  for (std::size_t j = 0; j < view.ticks.size(); ++j) {
    if (j == i) continue;
    if (view.arms[view.ticks[j].arm].informed()) {
      others_informed += view.ticks[j].budget;
    } else {
      others_uninformed += view.ticks[j].budget;
    }
  }

  BestResponse out;
  out.next_wealth.resize(view.arms.size());
  out.profit.resize(view.arms.size());
  std::array<Order, 3> orders{};
  for (std::size_t k = 0; k < view.arms.size(); ++k) {
    const Strategy& s = view.arms[k];
    const double post_cost = std::max(wealth_before - (s.informed() ? p.info_cost : 0.0), 0.0);
    const double budget = s.alpha * post_cost;
    orders[0] = {0, budget, s.informed() ? view.reservation_informed : view.reservation_uninformed};
    orders[1] = {1, others_informed, view.reservation_informed};
    orders[2] = {2, others_uninformed, view.reservation_uninformed};
    const ClearingResult r = clear_market(std::span<const Order>(orders), p.num_shares);
    const double w = settle_trader(wealth_before, s.informed(), p.info_cost, budget, r.allocations[0],
                                   r.price.value_or(0.0), view.payoff, p.risk_free);
    out.next_wealth[k] = w;
    out.profit[k] = w - wealth_before;
  }
  out.best_arm = static_cast<std::size_t>(
      std::max_element(out.next_wealth.begin(), out.next_wealth.end()) - out.next_wealth.begin());
  const double best = out.next_wealth[out.best_arm];
  const double actual = out.next_wealth[view.ticks[i].arm];
  out.actual_is_optimal = actual >= best - kOptimalityTolerance * std::abs(best);
  return out;
}

struct TraderConvergence {
  ArmId modal_arm{0};
  bool converged{false};
  std::size_t optimal_periods{0};
  bool optimal{false};
};

struct RunConvergence {
  std::vector<TraderConvergence> traders;
  std::size_t converged_count{0};
  std::size_t optimal_count{0};
  std::size_t num_traders{0};

  // Share of converged traders that are optimal; empty when none converged.
  [[nodiscard]] std::optional<double> optimal_fraction() const {
    if (converged_count == 0) return std::nullopt;
    return double(optimal_count) / double(converged_count);
  }
};

struct ConvergenceThresholds {
  std::size_t tail{2000};
  double stick_frac{0.8};
  double opt_frac{0.5};
};

// Over the final `tail` periods: converged if one arm accounts for at least
// stick_frac of choices; a converged trader is optimal if the arm actually
// played was a best response in at least opt_frac of those periods.
inline RunConvergence run_convergence(const RunLog& log, const ConvergenceThresholds& th = {}) {
  const std::size_t horizon = log.steps.size();
  if (th.tail < 1 || horizon < th.tail) {
    throw std::invalid_argument("run_convergence: horizon " + std::to_string(horizon) + " shorter than tail " +
                                std::to_string(th.tail));
  }
  const std::size_t first = horizon - th.tail;
  RunConvergence out;
  out.num_traders = log.choices.size();
  out.traders.resize(out.num_traders);
  for (std::size_t i = 0; i < out.num_traders; ++i) {
    const auto tail = std::span<const ArmId>(log.choices[i]).subspan(first, th.tail);
    const auto mode = modal_arm(tail);
    auto& tc = out.traders[i];
    tc.modal_arm = mode.arm;
    tc.converged = double(mode.count) >= th.stick_frac * double(th.tail);
  }
  for (std::size_t t = first; t < horizon; ++t) {
    const PeriodView view = period_view(log, t);
    for (std::size_t i = 0; i < out.num_traders; ++i) {
      auto& tc = out.traders[i];
      if (!tc.converged) continue;
      tc.optimal_periods += best_response_strategy(view, i, log.wealth_before(t, i)).actual_is_optimal;
    }
  }
  for (auto& tc : out.traders) {
    if (!tc.converged) continue;
    ++out.converged_count;
    tc.optimal = double(tc.optimal_periods) >= th.opt_frac * double(th.tail);
    out.optimal_count += tc.optimal;
  }
  return out;
}

struct ConvergenceReport {
  std::vector<std::size_t> converged_counts;
  std::vector<std::optional<double>> optimal_fractions;
  double mean_converged{0.0};
  double std_converged{0.0};
  // Optimal share averaged across runs, each run weighted by its converged share.
  std::optional<double> weighted_optimal_share;
};

inline ConvergenceReport convergence_summary(std::span<const RunConvergence> runs) {
  ConvergenceReport rep;
  if (runs.empty()) return rep;
  std::vector<double> counts;
  double wsum = 0.0, wacc = 0.0;
  for (const auto& r : runs) {
    rep.converged_counts.push_back(r.converged_count);
    rep.optimal_fractions.push_back(r.optimal_fraction());
    counts.push_back(double(r.converged_count));
    if (r.converged_count > 0 && r.num_traders > 0) {
      const double w = double(r.converged_count) / double(r.num_traders);
      wsum += w;
      wacc += w * *r.optimal_fraction();
    }
  }
  rep.mean_converged = mean(counts);
  rep.std_converged = sample_stddev(counts);
  if (wsum > 0.0) rep.weighted_optimal_share = wacc / wsum;
  return rep;
}

inline ConvergenceReport convergence_summary(std::span<const RunLog> logs, const ConvergenceThresholds& th = {}) {
  std::vector<RunConvergence> runs;
  runs.reserve(logs.size());
  for (const auto& log : logs) runs.push_back(run_convergence(log, th));
  return convergence_summary(std::span<const RunConvergence>(runs));
}

}  // namespace amsim

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace amsim {

// Absolute relative deviation of the clearing price from the discounted payoff.
inline double mispricing(double price, double payoff, double risk_free) {
  if (!(payoff > 0.0)) throw std::invalid_argument("mispricing: payoff must be > 0");
  return std::abs(price / (payoff / (1.0 + risk_free)) - 1.0);
}

// No-trade periods carry no mispricing.
inline std::optional<double> mispricing(std::optional<double> price, double payoff, double risk_free) {
  if (!price) return std::nullopt;
  return mispricing(*price, payoff, risk_free);
}

// Where the realized price sits between the all-minimum-alpha and
// all-maximum-alpha counterfactual prices. Empty when the bounds coincide or
// either side had no trade.
inline std::optional<double> delta_stat(std::optional<double> price, std::optional<double> price_alpha_min,
                                        std::optional<double> price_alpha_max) {
  if (!price || !price_alpha_max) return std::nullopt;
  const double lo = price_alpha_min.value_or(0.0);
  const double hi = *price_alpha_max;
  if (!(hi > lo)) return std::nullopt;
  return (*price - lo) / (hi - lo);
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty series");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Sample standard deviation (n - 1); 0 for fewer than two values.
inline double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double run_average_mispricing(std::span<const double> eps) {
  if (eps.empty()) throw std::invalid_argument("run_average_mispricing: empty series");
  return mean(eps);
}

// Skips absent entries; throws if nothing is present.
inline double run_average_mispricing(std::span<const std::optional<double>> eps) {
  std::vector<double> present;
  present.reserve(eps.size());
  for (const auto& e : eps) {
    if (e) present.push_back(*e);
  }
  return run_average_mispricing(std::span<const double>(present));
}

// Trailing mean; the first window-1 entries average the available prefix.
inline std::vector<double> moving_average(std::span<const double> xs, std::size_t window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= window) sum -= xs[i - window];
    const std::size_t n = std::min(i + 1, window);
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

// Trailing mean over the present entries of each window; empty when none are.
inline std::vector<std::optional<double>> moving_average(std::span<const std::optional<double>> xs,
                                                         std::size_t window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<std::optional<double>> out(xs.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i]) {
      sum += *xs[i];
      ++count;
    }
    if (i >= window && xs[i - window]) {
      sum -= *xs[i - window];
      --count;
    }
    if (count > 0) out[i] = sum / static_cast<double>(count);
  }
  return out;
}

// Linear-interpolation percentile (q in [0, 1]) of an unsorted sample.
inline double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("percentile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile: q must be in [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + (xs[hi] - xs[lo]) * frac;
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length series");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace amsim

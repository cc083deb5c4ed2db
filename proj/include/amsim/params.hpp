#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace amsim {

enum class Mode : std::uint8_t { strategic, competitive };

enum class Informedness : std::uint8_t { informed, uninformed };

inline std::string_view to_string(Mode m) noexcept {
  return m == Mode::strategic ? "strategic" : "competitive";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "strategic") return Mode::strategic;
  if (s == "competitive") return Mode::competitive;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected strategic|competitive)");
}

// Index of a mode in seed derivation; independent of the order modes are listed in a config.
constexpr std::uint64_t mode_index(Mode m) noexcept { return m == Mode::strategic ? 0 : 1; }

// One bandit arm: whether to buy the signal, and the share of wealth committed.
struct Strategy {
  Informedness informedness{Informedness::uninformed};
  double alpha{1.0};

  [[nodiscard]] bool informed() const noexcept { return informedness == Informedness::informed; }

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

inline std::string describe(const Strategy& s) {
  return std::string(s.informed() ? "Inf" : "Uninf") + "_a" + std::to_string(s.alpha);
}

struct MarketParams {
  std::size_t num_traders{100};
  double num_shares{1000.0};
  double info_cost{0.0};
  double initial_payoff{30.0};
  double risk_free{0.01 / 252.0};
  double payoff_drift{0.1 / 252.0};
  double payoff_vol{0.01};
  std::size_t horizon{2500};
  double exploration{0.001};
  std::vector<double> alpha_grid{0.01, 0.25, 0.5, 0.75, 1.0};
  Mode mode{Mode::strategic};
  // Initial wealth is drawn on (low, high].
  double initial_wealth_low{0.0};
  double initial_wealth_high{1000.0};
  std::uint64_t master_seed{0};

  [[nodiscard]] double alpha_min() const { return *std::min_element(alpha_grid.begin(), alpha_grid.end()); }
  [[nodiscard]] double alpha_max() const { return *std::max_element(alpha_grid.begin(), alpha_grid.end()); }

  // Throws std::invalid_argument naming the offending field.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::invalid_argument("invalid MarketParams." + field + ": " + why);
    };
    if (num_traders < 1) fail("num_traders", "must be >= 1");
    if (!(num_shares > 0.0) || !std::isfinite(num_shares)) fail("num_shares", "must be > 0");
    if (horizon < 1) fail("horizon", "must be >= 1");
    if (!(info_cost >= 0.0) || !std::isfinite(info_cost)) fail("info_cost", "must be >= 0");
    if (!(initial_payoff > 0.0) || !std::isfinite(initial_payoff)) fail("initial_payoff", "must be > 0");
    if (!(risk_free > -1.0) || !std::isfinite(risk_free)) fail("risk_free", "must be > -1");
    if (!std::isfinite(payoff_drift)) fail("payoff_drift", "must be finite");
    if (!(payoff_vol >= 0.0) || !std::isfinite(payoff_vol)) fail("payoff_vol", "must be >= 0");
    if (!(exploration >= 0.0) || !std::isfinite(exploration)) fail("exploration", "must be >= 0");
    if (alpha_grid.empty()) fail("alpha_grid", "must be nonempty");
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
      const double a = alpha_grid[i];
      if (!(a > 0.0 && a <= 1.0)) fail("alpha_grid", "every alpha must lie in (0, 1]");
      if (i > 0 && !(a > alpha_grid[i - 1])) fail("alpha_grid", "must be strictly increasing");
    }
    if (!(initial_wealth_low >= 0.0) || !(initial_wealth_high > initial_wealth_low) ||
        !std::isfinite(initial_wealth_high)) {
      fail("initial_wealth", "need 0 <= low < high");
    }
  }
};

// The arm set K. Informed arms first, each block in alpha-grid order.
// Competitive mode restricts K to full-wealth arms only.
inline std::vector<Strategy> strategy_set(const MarketParams& p) {
  std::vector<Strategy> arms;
  if (p.mode == Mode::competitive) {
    arms.push_back({Informedness::informed, 1.0});
    arms.push_back({Informedness::uninformed, 1.0});
    return arms;
  }
  for (Informedness inf : {Informedness::informed, Informedness::uninformed}) {
    for (double a : p.alpha_grid) arms.push_back({inf, a});
  }
  return arms;
}

}  // namespace amsim

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "amsim/io.hpp"
#include "amsim/metrics.hpp"
#include "amsim/params.hpp"
#include "amsim/random.hpp"

namespace amsim {

using json = nlohmann::json;

enum class Preset : std::uint8_t { none, table1, convergence };

inline std::string to_string(Preset p) {
  switch (p) {
    case Preset::table1: return "table1";
    case Preset::convergence: return "convergence";
    default: return "none";
  }
}

inline Preset parse_preset(const std::string& s) {
  if (s == "none") return Preset::none;
  if (s == "table1") return Preset::table1;
  if (s == "convergence") return Preset::convergence;
  throw std::invalid_argument("unknown preset '" + s + "' (expected none|table1|convergence)");
}

struct AnalysisSettings {
  std::size_t ma_window{300};
  std::size_t stick_window{kStickinessWindow};
  double stick_threshold{kStickinessThreshold};
  std::size_t delta_tail{500};
};

struct ExperimentConfig {
  MarketParams base;
  std::vector<double> cost_grid{0.0, 0.02, 0.04, 0.06, 0.08, 2.0, 4.0, 6.0, 8.0, 10.0};
  std::size_t num_runs{50};
  std::vector<Mode> modes{Mode::strategic, Mode::competitive};
  std::uint64_t seed_base{1};
  std::string output_dir;
  Preset preset{Preset::none};
  ConvergenceThresholds convergence;
  AnalysisSettings analysis;

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::invalid_argument("config." + field + ": " + why);
    };
    base.validate();
    if (cost_grid.empty()) fail("cost_grid", "must be nonempty");
    for (double c : cost_grid) {
      if (!(c >= 0.0) || !std::isfinite(c)) fail("cost_grid", "every cost must be finite and >= 0");
    }
    if (num_runs < 1) fail("num_runs", "must be >= 1");
    if (modes.empty()) fail("modes", "must be nonempty");
    if (std::set<Mode>(modes.begin(), modes.end()).size() != modes.size()) fail("modes", "duplicate mode");
    if (convergence.tail < 1) fail("convergence.tail", "must be >= 1");
    if (!(convergence.stick_frac > 0.0 && convergence.stick_frac <= 1.0)) fail("convergence.stick_frac", "must be in (0, 1]");
    if (!(convergence.opt_frac > 0.0 && convergence.opt_frac <= 1.0)) fail("convergence.opt_frac", "must be in (0, 1]");
    if (analysis.ma_window < 1) fail("analysis.ma_window", "must be >= 1");
    if (analysis.stick_window < 1) fail("analysis.stick_window", "must be >= 1");
    if (!(analysis.stick_threshold > 0.0 && analysis.stick_threshold <= 1.0)) fail("analysis.stick_threshold", "must be in (0, 1]");
    if (analysis.delta_tail < 1) fail("analysis.delta_tail", "must be >= 1");
  }
};

// table1: T = 2500. convergence: T = 10000 with a 2000-period audit tail.
inline void apply_preset(ExperimentConfig& cfg, Preset p) {
  cfg.preset = p;
  if (p == Preset::table1) {
    cfg.base.horizon = 2500;
  } else if (p == Preset::convergence) {
    cfg.base.horizon = 10000;
    cfg.convergence.tail = 2000;
  }
}

// Seed of run `run_index` in cost cell `cost_index` of `mode`.
inline std::uint64_t run_seed(std::uint64_t seed_base, Mode mode, std::size_t cost_index, std::size_t run_index) {
  return mix_seed({seed_base, mode_index(mode), cost_index, run_index});
}

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw std::invalid_argument(where + "." + it.key() + ": unknown key");
  }
}

inline double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw std::invalid_argument(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::uint64_t get_count(const json& obj, const char* key, const std::string& where, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) throw std::invalid_argument(where + "." + key + ": expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

inline std::vector<double> get_numbers(const json& obj, const char* key, const std::string& where,
                                       std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) throw std::invalid_argument(where + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw std::invalid_argument(where + "." + key + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

// Parses a config document. Missing keys keep their defaults; unknown keys are errors.
inline ExperimentConfig config_from_json(const json& doc) {
  using namespace detail;
  ExperimentConfig cfg;
  reject_unknown(doc, "config",
                 {"params", "cost_grid", "num_runs", "modes", "seed_base", "output_dir", "preset", "convergence",
                  "analysis"});

  if (doc.contains("params")) {
    const json& p = doc.at("params");
    const std::string w = "config.params";
    reject_unknown(p, w,
                   {"num_traders", "num_shares", "initial_payoff", "risk_free", "payoff_drift", "payoff_vol",
                    "horizon", "exploration", "alpha_grid", "initial_wealth_low", "initial_wealth_high"});
    MarketParams& b = cfg.base;
    b.num_traders = get_count(p, "num_traders", w, b.num_traders);
    b.num_shares = get_number(p, "num_shares", w, b.num_shares);
    b.initial_payoff = get_number(p, "initial_payoff", w, b.initial_payoff);
    b.risk_free = get_number(p, "risk_free", w, b.risk_free);
    b.payoff_drift = get_number(p, "payoff_drift", w, b.payoff_drift);
    b.payoff_vol = get_number(p, "payoff_vol", w, b.payoff_vol);
    b.horizon = get_count(p, "horizon", w, b.horizon);
    b.exploration = get_number(p, "exploration", w, b.exploration);
    b.alpha_grid = get_numbers(p, "alpha_grid", w, b.alpha_grid);
    b.initial_wealth_low = get_number(p, "initial_wealth_low", w, b.initial_wealth_low);
    b.initial_wealth_high = get_number(p, "initial_wealth_high", w, b.initial_wealth_high);
  }
  cfg.cost_grid = get_numbers(doc, "cost_grid", "config", cfg.cost_grid);
  cfg.num_runs = get_count(doc, "num_runs", "config", cfg.num_runs);
  cfg.seed_base = get_count(doc, "seed_base", "config", cfg.seed_base);
  if (doc.contains("modes")) {
    const json& m = doc.at("modes");
    if (!m.is_array()) throw std::invalid_argument("config.modes: expected an array of strings");
    cfg.modes.clear();
    for (const auto& x : m) {
      if (!x.is_string()) throw std::invalid_argument("config.modes: expected an array of strings");
      try {
        cfg.modes.push_back(parse_mode(x.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("config.modes: ") + e.what());
      }
    }
  }
  if (doc.contains("output_dir")) {
    if (!doc.at("output_dir").is_string()) throw std::invalid_argument("config.output_dir: expected a string");
    cfg.output_dir = doc.at("output_dir").get<std::string>();
  }
  if (doc.contains("convergence")) {
    const json& c = doc.at("convergence");
    const std::string w = "config.convergence";
    reject_unknown(c, w, {"tail", "stick_frac", "opt_frac"});
    cfg.convergence.tail = get_count(c, "tail", w, cfg.convergence.tail);
    cfg.convergence.stick_frac = get_number(c, "stick_frac", w, cfg.convergence.stick_frac);
    cfg.convergence.opt_frac = get_number(c, "opt_frac", w, cfg.convergence.opt_frac);
  }
  if (doc.contains("analysis")) {
    const json& a = doc.at("analysis");
    const std::string w = "config.analysis";
    reject_unknown(a, w, {"ma_window", "stick_window", "stick_threshold", "delta_tail"});
    cfg.analysis.ma_window = get_count(a, "ma_window", w, cfg.analysis.ma_window);
    cfg.analysis.stick_window = get_count(a, "stick_window", w, cfg.analysis.stick_window);
    cfg.analysis.stick_threshold = get_number(a, "stick_threshold", w, cfg.analysis.stick_threshold);
    cfg.analysis.delta_tail = get_count(a, "delta_tail", w, cfg.analysis.delta_tail);
  }
  if (doc.contains("preset")) {
    if (!doc.at("preset").is_string()) throw std::invalid_argument("config.preset: expected a string");
    try {
      apply_preset(cfg, parse_preset(doc.at("preset").get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("config.preset: ") + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    // MarketParams errors name their own field; re-root them under config.params.
    if (msg.rfind("invalid MarketParams.", 0) == 0) {
      throw std::invalid_argument("config.params." + msg.substr(std::string("invalid MarketParams.").size()));
    }
    throw;
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": malformed JSON: " + e.what());
  }
  return config_from_json(doc);
}

inline json params_to_json(const MarketParams& p) {
  return json{{"num_traders", p.num_traders},
              {"num_shares", p.num_shares},
              {"info_cost", p.info_cost},
              {"initial_payoff", p.initial_payoff},
              {"risk_free", p.risk_free},
              {"payoff_drift", p.payoff_drift},
              {"payoff_vol", p.payoff_vol},
              {"horizon", p.horizon},
              {"exploration", p.exploration},
              {"alpha_grid", p.alpha_grid},
              {"mode", std::string(to_string(p.mode))},
              {"initial_wealth_low", p.initial_wealth_low},
              {"initial_wealth_high", p.initial_wealth_high},
              {"master_seed", p.master_seed}};
}

inline MarketParams params_from_json(const json& j) {
  MarketParams p;
  p.num_traders = j.at("num_traders").get<std::size_t>();
  p.num_shares = j.at("num_shares").get<double>();
  p.info_cost = j.at("info_cost").get<double>();
  p.initial_payoff = j.at("initial_payoff").get<double>();
  p.risk_free = j.at("risk_free").get<double>();
  p.payoff_drift = j.at("payoff_drift").get<double>();
  p.payoff_vol = j.at("payoff_vol").get<double>();
  p.horizon = j.at("horizon").get<std::size_t>();
  p.exploration = j.at("exploration").get<double>();
  p.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
  p.mode = parse_mode(j.at("mode").get<std::string>());
  p.initial_wealth_low = j.at("initial_wealth_low").get<double>();
  p.initial_wealth_high = j.at("initial_wealth_high").get<double>();
  p.master_seed = j.at("master_seed").get<std::uint64_t>();
  p.validate();
  return p;
}

// Echo of a config in the input schema; round-trips through config_from_json.
inline json config_to_json(const ExperimentConfig& c) {
  json modes = json::array();
  for (Mode m : c.modes) modes.push_back(std::string(to_string(m)));
  const MarketParams& b = c.base;
  return json{{"params",
               {{"num_traders", b.num_traders},
                {"num_shares", b.num_shares},
                {"initial_payoff", b.initial_payoff},
                {"risk_free", b.risk_free},
                {"payoff_drift", b.payoff_drift},
                {"payoff_vol", b.payoff_vol},
                {"horizon", b.horizon},
                {"exploration", b.exploration},
                {"alpha_grid", b.alpha_grid},
                {"initial_wealth_low", b.initial_wealth_low},
                {"initial_wealth_high", b.initial_wealth_high}}},
              {"cost_grid", c.cost_grid},
              {"num_runs", c.num_runs},
              {"modes", modes},
              {"seed_base", c.seed_base},
              {"output_dir", c.output_dir},
              {"convergence",
               {{"tail", c.convergence.tail},
                {"stick_frac", c.convergence.stick_frac},
                {"opt_frac", c.convergence.opt_frac}}},
              {"analysis",
               {{"ma_window", c.analysis.ma_window},
                {"stick_window", c.analysis.stick_window},
                {"stick_threshold", c.analysis.stick_threshold},
                {"delta_tail", c.analysis.delta_tail}}}};
}

}  // namespace amsim

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "amsim/config.hpp"
#include "amsim/engine.hpp"
#include "amsim/io.hpp"
#include "amsim/metrics.hpp"

namespace amsim {

namespace fs = std::filesystem;

inline const std::vector<std::string_view> kTimeseriesColumns{
    "t",        "F",     "r_r",        "P_star",          "epsilon",           "P_cf_alpha_min", "P_cf_alpha_max",
    "delta",    "wealth_informed",     "wealth_uninformed", "wealth_total",   "n_informed",     "n_alpha1",
    "trades_capped"};

inline const std::vector<std::string_view> kTraderColumns{
    "trader_id",    "informed_rounds", "frac_alpha1_informed", "uninformed_rounds", "frac_alpha1_uninformed",
    "final_wealth", "converged_arm",   "converged_flag",       "optimal_flag"};

inline const std::vector<std::string_view> kStickinessColumns{"t", "n_sticking"};

struct TraderSummary {
  std::size_t trader_id{0};
  ScatterPoint scatter;
  double final_wealth{0.0};
  std::optional<std::size_t> converged_arm;
  bool converged{false};
  bool optimal{false};

  friend bool operator==(const TraderSummary&, const TraderSummary&) = default;
};

struct CellId {
  Mode mode{Mode::strategic};
  double cost{0.0};
  std::size_t cost_index{0};
  std::size_t run_index{0};
  std::uint64_t seed{0};
};

// The per-run series every aggregate is computed from. Built either from an
// in-memory RunLog or by parsing the run's persisted files; both give
// identical values.
struct RunData {
  CellId cell;
  std::vector<std::optional<double>> epsilon;
  std::vector<std::optional<double>> delta;
  std::vector<double> wealth_informed;
  std::vector<double> wealth_uninformed;
  std::vector<double> wealth_total;
  std::vector<TraderSummary> traders;
  std::vector<std::size_t> sticking;
};

inline std::vector<TraderSummary> summarize_traders(const RunLog& log, const RunConvergence& conv) {
  const auto scatter = strategy_scatter(log);
  std::vector<TraderSummary> out(log.choices.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& s = out[i];
    s.trader_id = i;
    s.scatter = scatter[i];
    s.final_wealth = log.steps.empty() ? log.initial_wealth[i] : log.steps.back().traders[i].wealth;
    s.converged = conv.traders[i].converged;
    s.optimal = conv.traders[i].optimal;
    if (s.converged) s.converged_arm = conv.traders[i].modal_arm;
  }
  return out;
}

// Audit tail actually used for a run: the configured tail, clipped to the horizon.
inline ConvergenceThresholds effective_thresholds(ConvergenceThresholds th, std::size_t horizon) {
  th.tail = std::min(th.tail, horizon);
  return th;
}

inline RunData summarize_run(const RunLog& log, const CellId& cell, const ExperimentConfig& cfg) {
  RunData d;
  d.cell = cell;
  const std::size_t n = log.steps.size();
  d.epsilon.reserve(n);
  d.delta.reserve(n);
  for (const auto& s : log.steps) {
    d.epsilon.push_back(s.epsilon);
    d.delta.push_back(s.delta);
  }
  auto split = wealth_split(log.steps);
  d.wealth_informed = std::move(split.informed);
  d.wealth_uninformed = std::move(split.uninformed);
  d.wealth_total = std::move(split.total);
  const RunConvergence conv = run_convergence(log, effective_thresholds(cfg.convergence, n));
  d.traders = summarize_traders(log, conv);
  d.sticking = stickiness_series(log.choices, cfg.analysis.stick_window, cfg.analysis.stick_threshold);
  return d;
}

inline std::string timeseries_csv(const RunLog& log) {
  std::string out = io::join_header(kTimeseriesColumns) + "\n";
  for (const auto& s : log.steps) {
    out += std::to_string(s.t);
    out += ',' + io::format_double(s.payoff);
    out += ',' + io::format_double(s.return_rate);
    out += ',' + io::format_optional(s.price);
    out += ',' + io::format_optional(s.epsilon);
    out += ',' + io::format_optional(s.price_alpha_min);
    out += ',' + io::format_optional(s.price_alpha_max);
    out += ',' + io::format_optional(s.delta);
    out += ',' + io::format_double(s.wealth_informed);
    out += ',' + io::format_double(s.wealth_uninformed);
    out += ',' + io::format_double(s.wealth_informed + s.wealth_uninformed);
    out += ',' + std::to_string(s.n_informed);
    out += ',' + std::to_string(s.n_alpha1);
    out += s.capped ? ",1\n" : ",0\n";
  }
  return out;
}

inline std::string traders_csv(const std::vector<TraderSummary>& traders) {
  std::string out = io::join_header(kTraderColumns) + "\n";
  for (const auto& s : traders) {
    out += std::to_string(s.trader_id);
    out += ',' + std::to_string(s.scatter.informed_rounds);
    out += ',' + io::format_optional(s.scatter.frac_alpha1_informed);
    out += ',' + std::to_string(s.scatter.uninformed_rounds);
    out += ',' + io::format_optional(s.scatter.frac_alpha1_uninformed);
    out += ',' + io::format_double(s.final_wealth);
    out += ',' + (s.converged_arm ? std::to_string(*s.converged_arm) : std::string());
    out += s.converged ? ",1" : ",0";
    out += s.optimal ? ",1\n" : ",0\n";
  }
  return out;
}

inline std::string stickiness_csv(const std::vector<std::size_t>& sticking) {
  std::string out = io::join_header(kStickinessColumns) + "\n";
  for (std::size_t t = 0; t < sticking.size(); ++t) {
    out += std::to_string(t + 1) + ',' + std::to_string(sticking[t]) + '\n';
  }
  return out;
}

inline bool parse_flag(std::string_view s, const std::string& where) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw std::runtime_error(where + ": flag must be 0 or 1, got '" + std::string(s) + "'");
}

struct ManifestEntry {
  CellId cell;
  std::string timeseries;
  std::string traders;
  std::string stickiness;
  std::string meta;
};

struct Manifest {
  json config;
  std::vector<ManifestEntry> runs;
  fs::path base_dir;
};

inline json manifest_to_json(const Manifest& m) {
  json runs = json::array();
  for (const auto& e : m.runs) {
    runs.push_back({{"mode", std::string(to_string(e.cell.mode))},
                    {"cost", e.cell.cost},
                    {"cost_index", e.cell.cost_index},
                    {"run_index", e.cell.run_index},
                    {"seed", e.cell.seed},
                    {"timeseries", e.timeseries},
                    {"traders", e.traders},
                    {"stickiness", e.stickiness},
                    {"meta", e.meta}});
  }
  return json{{"config", m.config}, {"runs", runs}, {"format_version", 1}};
}

inline Manifest load_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": malformed manifest: " + e.what());
  }
  Manifest m;
  m.base_dir = path.parent_path();
  m.config = doc.at("config");
  for (const auto& r : doc.at("runs")) {
    ManifestEntry e;
    e.cell.mode = parse_mode(r.at("mode").get<std::string>());
    e.cell.cost = r.at("cost").get<double>();
    e.cell.cost_index = r.at("cost_index").get<std::size_t>();
    e.cell.run_index = r.at("run_index").get<std::size_t>();
    e.cell.seed = r.at("seed").get<std::uint64_t>();
    e.timeseries = r.at("timeseries").get<std::string>();
    e.traders = r.at("traders").get<std::string>();
    e.stickiness = r.at("stickiness").get<std::string>();
    e.meta = r.at("meta").get<std::string>();
    m.runs.push_back(std::move(e));
  }
  return m;
}

inline std::string run_stem(const CellId& c) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s_c%02zu_r%03zu", std::string(to_string(c.mode)).c_str(), c.cost_index,
                c.run_index);
  return buf;
}

// Every (mode, cost, run) cell in manifest order.
inline std::vector<CellId> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<CellId> cells;
  for (Mode m : cfg.modes) {
    for (std::size_t ci = 0; ci < cfg.cost_grid.size(); ++ci) {
      for (std::size_t r = 0; r < cfg.num_runs; ++r) {
        cells.push_back({m, cfg.cost_grid[ci], ci, r, run_seed(cfg.seed_base, m, ci, r)});
      }
    }
  }
  return cells;
}

inline MarketParams cell_params(const ExperimentConfig& cfg, const CellId& c) {
  MarketParams p = cfg.base;
  p.mode = c.mode;
  p.info_cost = c.cost;
  p.master_seed = c.seed;
  return p;
}

// Runs `fn(i)` for i in [0, n) on `jobs` threads; rethrows the first failure.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// Simulates one cell in memory.
inline RunData simulate_cell(const ExperimentConfig& cfg, const CellId& cell) {
  const RunLog log = Simulation(cell_params(cfg, cell)).run();
  return summarize_run(log, cell, cfg);
}

// Runs every cell and writes per-run files plus manifest.json under `out_dir`.
// Output bytes depend only on the config, never on `jobs`.
inline Manifest run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, std::size_t jobs = 1) {
  cfg.validate();
  const auto cells = enumerate_cells(cfg);
  std::vector<ManifestEntry> entries(cells.size());
  fs::create_directories(out_dir / "runs");

  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const CellId& c = cells[i];
    const MarketParams params = cell_params(cfg, c);
    const RunLog log = Simulation(params).run();
    const RunData data = summarize_run(log, c, cfg);
    const std::string stem = run_stem(c);

    ManifestEntry e{c, "runs/" + stem + ".timeseries.csv", "runs/" + stem + ".traders.csv",
                    "runs/" + stem + ".stickiness.csv", "runs/" + stem + ".meta.json"};
    io::write_file_atomic(out_dir / e.timeseries, timeseries_csv(log));
    io::write_file_atomic(out_dir / e.traders, traders_csv(data.traders));
    io::write_file_atomic(out_dir / e.stickiness, stickiness_csv(data.sticking));

    std::vector<double> present;
    for (const auto& x : data.epsilon) {
      if (x) present.push_back(*x);
    }
    json meta{{"mode", std::string(to_string(c.mode))},
              {"cost", c.cost},
              {"cost_index", c.cost_index},
              {"run_index", c.run_index},
              {"seed", c.seed},
              {"params", params_to_json(params)},
              {"convergence",
               {{"tail", effective_thresholds(cfg.convergence, params.horizon).tail},
                {"stick_frac", cfg.convergence.stick_frac},
                {"opt_frac", cfg.convergence.opt_frac}}},
              {"payoff_redraws", log.payoff_redraws},
              {"epsilon_bar", present.empty() ? json(nullptr) : json(mean(present))}};
    io::write_file_atomic(out_dir / e.meta, meta.dump(2) + "\n");
    entries[i] = std::move(e);
  });

  Manifest m;
  m.config = config_to_json(cfg);
  m.runs = std::move(entries);
  m.base_dir = out_dir;
  io::write_file_atomic(out_dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
  return m;
}

// Re-reads one run's persisted files.
inline RunData load_run(const Manifest& m, const ManifestEntry& e) {
  RunData d;
  d.cell = e.cell;
  {
    const fs::path p = m.base_dir / e.timeseries;
    const auto t = io::CsvTable::parse(io::read_file(p), kTimeseriesColumns, p.string());
    for (std::size_t r = 0; r < t.rows(); ++r) {
      d.epsilon.push_back(io::parse_optional(t.at(r, 4)));
      d.delta.push_back(io::parse_optional(t.at(r, 7)));
      d.wealth_informed.push_back(io::parse_double(t.at(r, 8)));
      d.wealth_uninformed.push_back(io::parse_double(t.at(r, 9)));
      d.wealth_total.push_back(io::parse_double(t.at(r, 10)));
    }
  }
  {
    const fs::path p = m.base_dir / e.traders;
    const auto t = io::CsvTable::parse(io::read_file(p), kTraderColumns, p.string());
    for (std::size_t r = 0; r < t.rows(); ++r) {
      TraderSummary s;
      s.trader_id = io::parse_size(t.at(r, 0));
      s.scatter.informed_rounds = io::parse_size(t.at(r, 1));
      s.scatter.frac_alpha1_informed = io::parse_optional(t.at(r, 2));
      s.scatter.uninformed_rounds = io::parse_size(t.at(r, 3));
      s.scatter.frac_alpha1_uninformed = io::parse_optional(t.at(r, 4));
      s.final_wealth = io::parse_double(t.at(r, 5));
      if (!t.at(r, 6).empty()) s.converged_arm = io::parse_size(t.at(r, 6));
      s.converged = parse_flag(t.at(r, 7), p.string());
      s.optimal = parse_flag(t.at(r, 8), p.string());
      d.traders.push_back(s);
    }
  }
  {
    const fs::path p = m.base_dir / e.stickiness;
    const auto t = io::CsvTable::parse(io::read_file(p), kStickinessColumns, p.string());
    for (std::size_t r = 0; r < t.rows(); ++r) d.sticking.push_back(io::parse_size(t.at(r, 1)));
  }
  return d;
}

}  // namespace amsim

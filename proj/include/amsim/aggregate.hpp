#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "amsim/config.hpp"
#include "amsim/io.hpp"
#include "amsim/metrics.hpp"
#include "amsim/runner.hpp"
#include "amsim/stats.hpp"

namespace amsim {

// Cross-run summary of one (mode, cost) cell.
struct CellAggregate {
  Mode mode{Mode::strategic};
  double cost{0.0};
  std::size_t cost_index{0};
  std::size_t runs{0};

  std::vector<double> epsilon_bars;
  double mean_epsilon_bar{0.0};
  double std_epsilon_bar{0.0};

  // Cross-run means of trailing moving averages, indexed by period.
  std::vector<std::optional<double>> epsilon_ma;
  std::vector<double> wealth_informed_ma;
  std::vector<double> wealth_uninformed_ma;
  std::vector<double> wealth_total_ma;

  std::vector<std::optional<double>> delta_ma_mean;
  std::vector<std::optional<double>> delta_ma_p10;
  std::vector<std::optional<double>> delta_ma_p90;
  // Cross-run mean of each run's mean raw delta over the final delta_tail periods.
  std::optional<double> delta_tail_mean;
  std::optional<double> delta_band_p90_max;

  std::vector<double> sticking_mean;
  std::vector<double> sticking_p10;
  std::vector<double> sticking_p90;

  ConvergenceReport convergence;

  // (run_index, trader summary) pairs, in run order.
  std::vector<std::pair<std::size_t, TraderSummary>> scatter;
};

namespace detail {

inline std::vector<std::optional<double>> cross_run_mean(const std::vector<std::vector<std::optional<double>>>& s,
                                                         std::size_t len) {
  std::vector<std::optional<double>> out(len);
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& run : s) {
      if (t < run.size() && run[t]) {
        sum += *run[t];
        ++n;
      }
    }
    if (n > 0) out[t] = sum / double(n);
  }
  return out;
}

inline std::vector<double> cross_run_mean(const std::vector<std::vector<double>>& s, std::size_t len) {
  std::vector<double> out(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (const auto& run : s) sum += run.at(t);
    out[t] = sum / double(s.size());
  }
  return out;
}

inline std::optional<double> cross_run_percentile(const std::vector<std::vector<std::optional<double>>>& s,
                                                  std::size_t t, double q) {
  std::vector<double> xs;
  for (const auto& run : s) {
    if (t < run.size() && run[t]) xs.push_back(*run[t]);
  }
  if (xs.empty()) return std::nullopt;
  return percentile(std::move(xs), q);
}

}  // namespace detail

// All runs must belong to the same (mode, cost) cell and share a horizon.
inline CellAggregate aggregate_cell(std::span<const RunData> runs, const AnalysisSettings& a) {
  if (runs.empty()) throw std::invalid_argument("aggregate_cell: no runs");
  CellAggregate c;
  c.mode = runs.front().cell.mode;
  c.cost = runs.front().cell.cost;
  c.cost_index = runs.front().cell.cost_index;
  c.runs = runs.size();
  const std::size_t len = runs.front().epsilon.size();

  std::vector<std::vector<std::optional<double>>> eps_ma, delta_ma;
  std::vector<std::vector<double>> wi_ma, wu_ma, wt_ma;
  std::vector<double> delta_tails;
  std::vector<RunConvergence> conv;
  for (const RunData& r : runs) {
    if (r.cell.mode != c.mode || r.cell.cost_index != c.cost_index) {
      throw std::invalid_argument("aggregate_cell: runs from different cells");
    }
    if (r.epsilon.size() != len) throw std::invalid_argument("aggregate_cell: runs have different horizons");

    std::vector<double> present;
    for (const auto& e : r.epsilon) {
      if (e) present.push_back(*e);
    }
    if (!present.empty()) c.epsilon_bars.push_back(run_average_mispricing(std::span<const double>(present)));

    eps_ma.push_back(moving_average(std::span<const std::optional<double>>(r.epsilon), a.ma_window));
    delta_ma.push_back(moving_average(std::span<const std::optional<double>>(r.delta), a.ma_window));
    wi_ma.push_back(moving_average(std::span<const double>(r.wealth_informed), a.ma_window));
    wu_ma.push_back(moving_average(std::span<const double>(r.wealth_uninformed), a.ma_window));
    wt_ma.push_back(moving_average(std::span<const double>(r.wealth_total), a.ma_window));

    const std::size_t tail = std::min(a.delta_tail, len);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = len - tail; t < len; ++t) {
      if (r.delta[t]) {
        sum += *r.delta[t];
        ++n;
      }
    }
    if (n > 0) delta_tails.push_back(sum / double(n));

    RunConvergence rc;
    rc.num_traders = r.traders.size();
    for (const auto& tr : r.traders) {
      rc.converged_count += tr.converged;
      rc.optimal_count += tr.converged && tr.optimal;
      c.scatter.emplace_back(r.cell.run_index, tr);
    }
    conv.push_back(rc);
  }

  if (!c.epsilon_bars.empty()) {
    c.mean_epsilon_bar = mean(c.epsilon_bars);
    c.std_epsilon_bar = sample_stddev(c.epsilon_bars);
  }
  c.epsilon_ma = detail::cross_run_mean(eps_ma, len);
  c.wealth_informed_ma = detail::cross_run_mean(wi_ma, len);
  c.wealth_uninformed_ma = detail::cross_run_mean(wu_ma, len);
  c.wealth_total_ma = detail::cross_run_mean(wt_ma, len);
  c.delta_ma_mean = detail::cross_run_mean(delta_ma, len);
  c.delta_ma_p10.resize(len);
  c.delta_ma_p90.resize(len);
  for (std::size_t t = 0; t < len; ++t) {
    c.delta_ma_p10[t] = detail::cross_run_percentile(delta_ma, t, 0.10);
    c.delta_ma_p90[t] = detail::cross_run_percentile(delta_ma, t, 0.90);
    if (c.delta_ma_p90[t]) {
      c.delta_band_p90_max = std::max(c.delta_band_p90_max.value_or(*c.delta_ma_p90[t]), *c.delta_ma_p90[t]);
    }
  }
  if (!delta_tails.empty()) c.delta_tail_mean = mean(delta_tails);

  const std::size_t slen = runs.front().sticking.size();
  c.sticking_mean.resize(slen);
  c.sticking_p10.resize(slen);
  c.sticking_p90.resize(slen);
  for (std::size_t t = 0; t < slen; ++t) {
    std::vector<double> xs;
    for (const RunData& r : runs) xs.push_back(double(r.sticking.at(t)));
    c.sticking_mean[t] = mean(xs);
    c.sticking_p10[t] = percentile(xs, 0.10);
    c.sticking_p90[t] = percentile(std::move(xs), 0.90);
  }

  c.convergence = convergence_summary(std::span<const RunConvergence>(conv));
  return c;
}

inline std::string cost_label(double cost) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), cost);
  if (ec != std::errc{}) throw std::runtime_error("cost_label: conversion failed");
  return std::string(buf, end);
}

inline std::string cell_file(const std::string& kind, const CellAggregate& c) {
  return kind + "_" + std::string(to_string(c.mode)) + "_C" + cost_label(c.cost) + ".csv";
}

inline json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

// Writes the per-cell series files and returns the cell's JSON summary.
inline json write_cell(const CellAggregate& c, const fs::path& dir) {
  using io::format_double;
  using io::format_optional;
  json files;
  {
    std::string s = "t,epsilon_ma,wealth_informed_ma,wealth_uninformed_ma,wealth_total_ma\n";
    for (std::size_t t = 0; t < c.epsilon_ma.size(); ++t) {
      s += std::to_string(t + 1) + ',' + format_optional(c.epsilon_ma[t]) + ',' +
           format_double(c.wealth_informed_ma[t]) + ',' + format_double(c.wealth_uninformed_ma[t]) + ',' +
           format_double(c.wealth_total_ma[t]) + '\n';
    }
    const std::string name = cell_file("mispricing_wealth", c);
    io::write_file_atomic(dir / name, s);
    files["mispricing_wealth"] = name;
  }
  {
    std::string s = "t,delta_ma_mean,delta_ma_p10,delta_ma_p90\n";
    for (std::size_t t = 0; t < c.delta_ma_mean.size(); ++t) {
      s += std::to_string(t + 1) + ',' + format_optional(c.delta_ma_mean[t]) + ',' +
           format_optional(c.delta_ma_p10[t]) + ',' + format_optional(c.delta_ma_p90[t]) + '\n';
    }
    const std::string name = cell_file("delta_band", c);
    io::write_file_atomic(dir / name, s);
    files["delta_band"] = name;
  }
  {
    std::string s =
        "run_index,trader_id,informed_rounds,frac_alpha1_informed,uninformed_rounds,frac_alpha1_uninformed\n";
    for (const auto& [run, tr] : c.scatter) {
      s += std::to_string(run) + ',' + std::to_string(tr.trader_id) + ',' +
           std::to_string(tr.scatter.informed_rounds) + ',' + format_optional(tr.scatter.frac_alpha1_informed) +
           ',' + std::to_string(tr.scatter.uninformed_rounds) + ',' +
           format_optional(tr.scatter.frac_alpha1_uninformed) + '\n';
    }
    const std::string name = cell_file("scatter", c);
    io::write_file_atomic(dir / name, s);
    files["scatter"] = name;
  }
  {
    std::string s = "t,sticking_mean,sticking_p10,sticking_p90\n";
    for (std::size_t t = 0; t < c.sticking_mean.size(); ++t) {
      s += std::to_string(t + 1) + ',' + format_double(c.sticking_mean[t]) + ',' + format_double(c.sticking_p10[t]) +
           ',' + format_double(c.sticking_p90[t]) + '\n';
    }
    const std::string name = cell_file("stickiness", c);
    io::write_file_atomic(dir / name, s);
    files["stickiness"] = name;
  }

  json counts = json::array();
  for (auto n : c.convergence.converged_counts) counts.push_back(n);
  return json{{"mode", std::string(to_string(c.mode))},
              {"cost", c.cost},
              {"cost_index", c.cost_index},
              {"runs", c.runs},
              {"epsilon_bar", {{"mean", c.mean_epsilon_bar}, {"std", c.std_epsilon_bar}, {"per_run", c.epsilon_bars}}},
              {"delta", {{"tail_mean", optional_json(c.delta_tail_mean)},
                         {"band_p90_max", optional_json(c.delta_band_p90_max)}}},
              {"convergence", {{"mean_converged", c.convergence.mean_converged},
                               {"std_converged", c.convergence.std_converged},
                               {"optimal_share", optional_json(c.convergence.weighted_optimal_share)},
                               {"converged_counts", counts}}},
              {"files", files}};
}

// Verifies every run file referenced by the manifest exists.
inline void check_manifest_complete(const Manifest& m) {
  std::vector<std::string> missing;
  for (const auto& e : m.runs) {
    for (const std::string* f : {&e.timeseries, &e.traders, &e.stickiness}) {
      if (!fs::exists(m.base_dir / *f)) {
        missing.push_back(std::string(to_string(e.cell.mode)) + " C=" + cost_label(e.cell.cost) + " run " +
                          std::to_string(e.cell.run_index) + " (" + *f + ")");
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "manifest is incomplete; missing runs:";
    for (const auto& s : missing) msg += "\n  " + s;
    throw std::runtime_error(msg);
  }
}

// Folds the persisted run files cell by cell and writes aggregates.json plus
// per-cell series under `out_dir`. Returns the aggregates document.
inline json aggregate_and_write(const Manifest& m, const fs::path& out_dir) {
  check_manifest_complete(m);
  const ExperimentConfig cfg = config_from_json(m.config);

  std::map<std::tuple<std::size_t, std::size_t>, std::vector<const ManifestEntry*>> cells;
  for (const auto& e : m.runs) cells[{mode_index(e.cell.mode), e.cell.cost_index}].push_back(&e);

  fs::create_directories(out_dir);
  json cell_docs = json::array();
  for (const auto& [key, entries] : cells) {
    std::vector<RunData> runs;
    runs.reserve(entries.size());
    for (const ManifestEntry* e : entries) runs.push_back(load_run(m, *e));
    const CellAggregate agg = aggregate_cell(runs, cfg.analysis);
    cell_docs.push_back(write_cell(agg, out_dir));
  }
  json doc{{"cells", cell_docs}, {"analysis", m.config.at("analysis")}, {"format_version", 1}};
  io::write_file_atomic(out_dir / "aggregates.json", doc.dump(2) + "\n");
  return doc;
}

inline json aggregate_and_write(const fs::path& manifest_path, const fs::path& out_dir) {
  return aggregate_and_write(load_manifest(manifest_path), out_dir);
}

}  // namespace amsim

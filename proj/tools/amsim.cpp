#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "amsim/aggregate.hpp"
#include "amsim/config.hpp"
#include "amsim/engine.hpp"
#include "amsim/io.hpp"
#include "amsim/metrics.hpp"
#include "amsim/runner.hpp"

namespace fs = std::filesystem;
using amsim::json;

namespace {

// --out, then SIM_OUT_DIR, then the config's output_dir, then ./out.
fs::path resolve_out_dir(const std::string& flag, const std::string& from_config) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SIM_OUT_DIR"); env && *env) return env;
  if (!from_config.empty()) return from_config;
  return "out";
}

int cmd_simulate(const std::string& config_path, const std::string& preset, const std::string& mode,
                 std::size_t jobs, const std::string& out) {
  amsim::ExperimentConfig cfg = amsim::load_config(config_path);
  if (!preset.empty()) amsim::apply_preset(cfg, amsim::parse_preset(preset));
  if (mode == "both") {
    cfg.modes = {amsim::Mode::strategic, amsim::Mode::competitive};
  } else if (!mode.empty()) {
    cfg.modes = {amsim::parse_mode(mode)};
  }
  cfg.validate();
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  const fs::path dir = resolve_out_dir(out, cfg.output_dir);
  const amsim::Manifest m = amsim::run_experiment(cfg, dir, jobs);
  std::cout << "wrote " << m.runs.size() << " runs to " << (dir / "manifest.json").string() << "\n";
  return 0;
}

int cmd_aggregate(const std::string& manifest_path, const std::string& out) {
  const fs::path mp(manifest_path);
  const fs::path dir = out.empty() ? mp.parent_path() / "aggregates" : fs::path(out);
  const json doc = amsim::aggregate_and_write(mp, dir);
  std::cout << "aggregated " << doc.at("cells").size() << " cells into " << (dir / "aggregates.json").string()
            << "\n";
  return 0;
}

int cmd_audit(const std::string& meta_path, std::optional<std::size_t> tail_flag) {
  const json meta = json::parse(amsim::io::read_file(meta_path));
  const amsim::MarketParams params = amsim::params_from_json(meta.at("params"));
  amsim::ConvergenceThresholds th;
  if (meta.contains("convergence")) {
    const json& c = meta.at("convergence");
    th.tail = c.at("tail").get<std::size_t>();
    th.stick_frac = c.at("stick_frac").get<double>();
    th.opt_frac = c.at("opt_frac").get<double>();
  }
  if (tail_flag) th.tail = *tail_flag;
  th = amsim::effective_thresholds(th, params.horizon);

  const amsim::RunLog log = amsim::run_simulation(params, params.master_seed);
  const amsim::RunConvergence conv = amsim::run_convergence(log, th);
  std::cout << "trader_id,modal_arm,strategy,converged,optimal_periods,optimal\n";
  for (std::size_t i = 0; i < conv.traders.size(); ++i) {
    const auto& tc = conv.traders[i];
    std::cout << i << ',' << tc.modal_arm << ',' << amsim::describe(log.strategies[tc.modal_arm]) << ','
              << int(tc.converged) << ',' << tc.optimal_periods << ',' << int(tc.optimal) << '\n';
  }
  std::cerr << "tail " << th.tail << ": " << conv.converged_count << " converged, " << conv.optimal_count
            << " optimal\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strategic trading market simulator"};
  app.require_subcommand(1);

  std::string config_path, preset, mode, out;
  std::size_t jobs = 0;
  auto* sim = app.add_subcommand("simulate", "Run an experiment battery");
  sim->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--preset", preset, "Preset override")->check(CLI::IsMember({"table1", "convergence"}));
  sim->add_option("--mode", mode, "Mode override")->check(CLI::IsMember({"strategic", "competitive", "both"}));
  sim->add_option("--jobs", jobs, "Worker threads (0 = hardware concurrency)");
  sim->add_option("--out", out, "Output directory");

  std::string manifest_path, agg_out;
  auto* agg = app.add_subcommand("aggregate", "Aggregate a completed battery");
  agg->add_option("--manifest", manifest_path, "manifest.json of a battery")->required()->check(CLI::ExistingFile);
  agg->add_option("--out", agg_out, "Output directory (default: <manifest dir>/aggregates)");

  std::string run_path;
  std::optional<std::size_t> tail;
  auto* audit = app.add_subcommand("audit", "Best-response audit for one run");
  audit->add_option("--run", run_path, "Per-run .meta.json file")->required()->check(CLI::ExistingFile);
  audit->add_option("--tail", tail, "Audit window length");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(config_path, preset, mode, jobs, out);
    if (*agg) return cmd_aggregate(manifest_path, agg_out);
    if (*audit) return cmd_audit(run_path, tail);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "amsim/config.hpp"
#include "amsim/io.hpp"

using namespace amsim;

namespace {
std::string error_of(const std::string& text) {
  try {
    config_from_json(json::parse(text));
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST(Io, DoublesRoundTripBitExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, double(i % 40) - 20.0);
    ASSERT_EQ(io::parse_double(io::format_double(x)), x);
  }
  EXPECT_EQ(io::parse_double(io::format_double(0.1)), 0.1);
  EXPECT_EQ(io::format_optional(std::nullopt), "");
  EXPECT_FALSE(io::parse_optional(""));
  EXPECT_THROW(io::parse_double("1.5x"), std::runtime_error);
  EXPECT_THROW(io::parse_size("-1"), std::runtime_error);
}

TEST(Io, CsvHeaderAndFieldCountsChecked) {
  const std::vector<std::string_view> cols{"a", "b"};
  const auto t = io::CsvTable::parse("a,b\n1,\n3,4\n", cols, "x.csv");
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.at(0, 1), "");
  EXPECT_EQ(t.at(1, 0), "3");
  EXPECT_THROW(io::CsvTable::parse("a,c\n1,2\n", cols, "x.csv"), std::runtime_error);
  EXPECT_THROW(io::CsvTable::parse("a,b\n1,2,3\n", cols, "x.csv"), std::runtime_error);
  EXPECT_THROW(io::CsvTable::parse("", cols, "x.csv"), std::runtime_error);
}

TEST(Io, AtomicWriteReplacesContent) {
  const auto dir = std::filesystem::temp_directory_path() / "amsim_io_test";
  std::filesystem::remove_all(dir);
  io::write_file_atomic(dir / "f.txt", "first");
  io::write_file_atomic(dir / "f.txt", "second");
  EXPECT_EQ(io::read_file(dir / "f.txt"), "second");
  EXPECT_FALSE(std::filesystem::exists(dir / "f.txt.tmp"));
  std::filesystem::remove_all(dir);
}

TEST(Config, DefaultsMatchTableOne) {
  const auto cfg = config_from_json(json::object());
  EXPECT_EQ(cfg.cost_grid, (std::vector<double>{0, 0.02, 0.04, 0.06, 0.08, 2, 4, 6, 8, 10}));
  EXPECT_EQ(cfg.num_runs, 50u);
  EXPECT_EQ(cfg.modes.size(), 2u);
  EXPECT_EQ(cfg.base.horizon, 2500u);
}

TEST(Config, Presets) {
  auto cfg = config_from_json(json::parse(R"({"preset":"convergence","params":{"horizon":7}})"));
  EXPECT_EQ(cfg.base.horizon, 10000u);
  EXPECT_EQ(cfg.convergence.tail, 2000u);
  cfg = config_from_json(json::parse(R"({"preset":"table1"})"));
  EXPECT_EQ(cfg.base.horizon, 2500u);
  EXPECT_NE(error_of(R"({"preset":"fast"})").find("config.preset"), std::string::npos);
}

TEST(Config, FieldLevelErrors) {
  EXPECT_EQ(error_of(R"({"colour":1})"), "config.colour: unknown key");
  EXPECT_EQ(error_of(R"({"params":{"horizn":5}})"), "config.params.horizn: unknown key");
  EXPECT_NE(error_of(R"({"num_runs":0})").find("config.num_runs"), std::string::npos);
  EXPECT_NE(error_of(R"({"cost_grid":[]})").find("config.cost_grid"), std::string::npos);
  EXPECT_NE(error_of(R"({"cost_grid":[1,"x"]})").find("config.cost_grid"), std::string::npos);
  EXPECT_NE(error_of(R"({"modes":["bogus"]})").find("config.modes"), std::string::npos);
  EXPECT_NE(error_of(R"({"params":{"num_traders":0}})").find("config.params.num_traders"), std::string::npos);
  EXPECT_NE(error_of(R"({"params":{"alpha_grid":[0.5,0.2]}})").find("config.params.alpha_grid"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"params":{"payoff_vol":"high"}})").find("config.params.payoff_vol"), std::string::npos);
  EXPECT_NE(error_of(R"({"convergence":{"stick_frac":2}})").find("config.convergence"), std::string::npos);
}

TEST(Config, EchoRoundTrips) {
  const auto cfg = config_from_json(json::parse(
      R"({"cost_grid":[0,2],"num_runs":3,"modes":["competitive"],"seed_base":99,"params":{"num_traders":7}})"));
  const json echo = config_to_json(cfg);
  const auto back = config_from_json(echo);
  EXPECT_EQ(config_to_json(back), echo);
  EXPECT_EQ(back.modes, (std::vector<Mode>{Mode::competitive}));
  EXPECT_EQ(back.base.num_traders, 7u);
}

TEST(Config, RunSeedsArePureAndDistinct) {
  EXPECT_EQ(run_seed(1, Mode::strategic, 2, 3), mix_seed({1, 0, 2, 3}));
  EXPECT_EQ(run_seed(1, Mode::competitive, 2, 3), mix_seed({1, 1, 2, 3}));
  std::set<std::uint64_t> seen;
  for (Mode m : {Mode::strategic, Mode::competitive}) {
    for (std::size_t c = 0; c < 10; ++c) {
      for (std::size_t r = 0; r < 50; ++r) seen.insert(run_seed(1, m, c, r));
    }
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Config, ParamsJsonRoundTrip) {
  MarketParams p;
  p.info_cost = 0.06;
  p.master_seed = 123456789012345ULL;
  p.mode = Mode::competitive;
  const MarketParams q = params_from_json(params_to_json(p));
  EXPECT_EQ(params_to_json(q), params_to_json(p));
}

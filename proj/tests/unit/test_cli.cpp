#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "srclock/cli/commands.hpp"

namespace srclock::cli {
namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("srclock_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string log;
};

Run run_cli(const std::string& command, const std::string& config, const fs::path& out, int mini = 1) {
  Invocation inv;
  inv.command = command;
  inv.config = parse_config_text(config);
  inv.out = out;
  inv.mini = mini;
  std::ostringstream log;
  inv.log = &log;
  const int code = dispatch(inv);
  return {code, log.str()};
}

/// Runs the built binary; returns its exit status and combined output.
Run run_binary(const std::string& args) {
  const fs::path capture = fs::temp_directory_path() / "srclock_cli_test_capture.txt";
  const std::string cmd = std::string(SRCLOCK_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {status, slurp(capture)};
}

const char* kQuickOptimize = R"({
  "optimizer": {"n_segments": 8, "duration_s": 0.0005, "batch_size": 1, "max_iterations": 300, "learning_rate": 0.1},
  "noise_widths": {"eps_plus": 0, "eps_minus": 0, "beta_a": 0, "beta_v": 0, "beta_b": 0}
})";

TEST(CliOptimize, ZeroWidthRunReachesPiArea) {
  const auto out = scratch("opt");
  ASSERT_EQ(run_cli("optimize", kQuickOptimize, out).code, 0);
  std::istringstream trace(slurp(out / "trace.csv"));
  std::string line, last;
  while (std::getline(trace, line))
    if (!line.empty()) last = line;
  const double best = std::stod(last.substr(last.find(',', last.find(',') + 1) + 1));
  EXPECT_LE(best, 1e-6);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(CliOptimize, RerunIsByteIdentical) {
  const auto a = scratch("opt_a"), b = scratch("opt_b");
  run_cli("optimize", kQuickOptimize, a);
  run_cli("optimize", kQuickOptimize, b);
  EXPECT_EQ(slurp(a / "pulse.txt"), slurp(b / "pulse.txt"));
  const auto manifest = json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest["constants_hash"], constants_hash(PhysicalConstants{}));
  EXPECT_EQ(manifest["config"], parse_config_text(kQuickOptimize));
  EXPECT_EQ(manifest["version"], SRCLOCK_VERSION);
}

TEST(CliOptimize, MissingFieldNamedInMessage) {
  const auto dir = scratch("missing");
  std::ofstream(dir / "c.json") << R"({"optimizer": {"n_segments": 8, "batch_size": 1, "max_iterations": 3}})";
  const auto r = run_binary("optimize --config " + (dir / "c.json").string() + " --out " + (dir / "o").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.log.find("optimizer.duration_s"), std::string::npos) << r.log;
}

TEST(CliConfig, SyntaxErrorReportsLine) {
  try {
    parse_config_text("{\n  \"pulse\": {\n    \"primitive\": tru\n  }\n}", "c.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("c.json:3:"), std::string::npos) << e.what();
  }
}

TEST(CliConfig, UnknownKeysAndUnitsRejected) {
  const auto out = scratch("unknown");
  EXPECT_THROW(run_cli("evaluate", R"({"pulse": {"primitive": true}, "constants": {"rabi_peak": 3000}})", out),
               ConfigError);
  EXPECT_THROW(run_cli("evaluate", R"({"pulse": {"primitive": true}, "extras": 1})", out), ConfigError);
}

TEST(CliConfig, ConstantsConvertHzToAngular) {
  const auto j = parse_config_text(R"({"constants": {"rabi_peak_hz": 1500, "doppler_unit_hz": 50}})");
  const auto c = constants_from(Node(j, ""));
  EXPECT_DOUBLE_EQ(c.rabiPeak, kTwoPi * 1500);
  EXPECT_DOUBLE_EQ(c.omegaD, kTwoPi * 50);
}

double evaluate_infidelity(const std::string& config) {
  const auto out = scratch("eval");
  run_cli("evaluate", config, out);
  std::istringstream csv(slurp(out / "evaluate.csv"));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  return std::stod(row.substr(0, row.find(',')));
}

TEST(CliEvaluate, PrimitiveAtZeroNoiseAndDetuned) {
  EXPECT_LE(evaluate_infidelity(R"({"pulse": {"primitive": true}})"), 1e-10);
  const double omega = kTwoPi * 3.0e3, delta = kTwoPi * 100.0, g = std::hypot(omega, delta);
  const double transfer = omega * omega / (g * g) * std::pow(std::sin(0.5 * g * std::numbers::pi / omega), 2);
  EXPECT_NEAR(evaluate_infidelity(R"({"pulse": {"primitive": true}, "evaluate": {"noise_point": {"beta_v": 1.0}}})"),
              1.0 - transfer, 1e-6);
}

TEST(CliEvaluate, CorruptPulseFileFails) {
  const auto dir = scratch("corrupt");
  std::ofstream(dir / "p.txt") << "# srclock waveform v1\nsegment_duration_s nope\n";
  const auto r = run_binary("evaluate --pulse " + (dir / "p.txt").string() + " --out " + (dir / "o").string());
  EXPECT_NE(r.code, 0);
}

TEST(CliSweep, ThreeByThreeGridEmitsNineRows) {
  const auto out = scratch("sweep");
  const auto r = run_cli("sweep2d", R"({"pulse": {"primitive": true}, "sweep": {
      "x": {"channel": "eps_plus", "min": -0.1, "max": 0.1, "points": 3},
      "y": {"channel": "beta_v", "min": -1, "max": 1, "points": 3}}})",
                         out);
  ASSERT_EQ(r.code, 0);
  const auto t = read_csv(out / "sweep.csv");
  EXPECT_EQ(t.rows.size(), 9u);
  EXPECT_EQ(t.header[0], "eps_plus");
  EXPECT_EQ(t.header[1], "beta_v");
  EXPECT_TRUE(fs::exists(out / "sweep.csv.meta.json"));
  // 17 significant digits round trip
  EXPECT_EQ(t.rows[1][0], format_double(0.0));
}

TEST(CliArea, SyntheticDiskMap) {
  const auto dir = scratch("area");
  {
    std::ofstream os(dir / "map.csv");
    os << "x,y,infidelity_mean\n";
    for (int j = 0; j < 101; ++j)
      for (int i = 0; i < 101; ++i) {
        const double x = -1.0 + 0.02 * i, y = -1.0 + 0.02 * j;
        os << format_double(x) << ',' << format_double(y) << ',' << format_double(x * x + y * y) << '\n';
      }
  }
  Invocation inv;
  inv.command = "area";
  inv.config = parse_config_text(R"({"area": {"threshold": 0.25, "map_csv": "map.csv"}})");
  inv.configDir = dir;
  inv.out = dir / "o";
  std::ostringstream log;
  inv.log = &log;
  ASSERT_EQ(dispatch(inv), 0);
  const auto t = read_csv(dir / "o" / "area.csv");
  const double area = std::stod(t.rows[0][1]);
  // one ring of cells around the r = 0.5 circle
  EXPECT_NEAR(area, std::numbers::pi * 0.25, 2 * std::numbers::pi * 0.5 * 0.02 * std::sqrt(2.0));
}

TEST(CliContrast, PerfectFringes) {
  const auto out = scratch("contrast");
  const auto r = run_cli("contrast", R"({"contrast": {"widths": [0.5, 2.0],
      "table": {"x": [-1, 1], "transfer_efficiency": [1, 1], "phase_mean_rad": [0, 0]}}})",
                         out);
  ASSERT_EQ(r.code, 0);
  const auto t = read_csv(out / "contrast.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& row : t.rows) EXPECT_NEAR(std::stod(row[2]), 1.0, 2.0 / std::sqrt(50000.0));
}

TEST(CliInterferometer, MiniScalesStages) {
  const auto out = scratch("ifo");
  const auto r = run_cli("interferometer", R"({"pulse": {"primitive": true}})", out, 20);
  ASSERT_EQ(r.code, 0);
  const auto t = read_csv(out / "interferometer.csv");
  EXPECT_EQ(t.rows[0][t.column("pulses")], "100");
  EXPECT_EQ(t.rows[0][t.column("upper_momentum")], "1");
  EXPECT_EQ(t.rows[0][t.column("lower_momentum")], "0");
  EXPECT_THROW(run_cli("interferometer", R"({"pulse": {"primitive": true}})", out, 7), ConfigError);
}

TEST(CliPlotExport, ChecksColumns) {
  const auto dir = scratch("plot");
  std::ofstream(dir / "d.csv") << "beta_v,infidelity_mean\n0,1\n";
  Invocation inv;
  inv.command = "plot-export";
  inv.configDir = dir;
  inv.out = dir / "o";
  std::ostringstream log;
  inv.log = &log;
  inv.config = parse_config_text(R"({"plot": {"kind": "line", "data_csv": "d.csv", "x": "beta_v", "value": "infidelity_mean"}})");
  ASSERT_EQ(dispatch(inv), 0);
  EXPECT_EQ(slurp(dir / "o" / "data.csv"), slurp(dir / "d.csv"));
  inv.config = parse_config_text(R"({"plot": {"kind": "line", "data_csv": "d.csv", "x": "beta_v", "value": "nope"}})");
  EXPECT_THROW(dispatch(inv), ConfigError);
}

TEST(CliBinary, UnknownSubcommandFails) { EXPECT_NE(run_binary("frobnicate").code, 0); }

}  // namespace
}  // namespace srclock::cli

#include "cli_app.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>

using namespace toffoli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "toffoli_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("toffoli_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("TOFFOLI_OUTPUT_DIR");
  }
  void TearDown() override {
    unsetenv("TOFFOLI_OUTPUT_DIR");
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // A cheap optimized schedule to feed the sweep commands.
  std::string make_fields() {
    const CliRun r = invoke({"optimize", "--starts", "1", "--seed", "7", "--threads", "1", "--out", path("fields.json")});
    EXPECT_EQ(r.code, 0) << r.err;
    return path("fields.json");
  }

  fs::path dir_;
};

// The recorded command line differs between runs; everything else must match.
std::string without_command(const std::string& csv) {
  return std::regex_replace(csv, std::regex("# command: [^\n]*\n"), "");
}

std::size_t data_rows(const std::string& csv_path) { return io::parse_csv(io::read_text(csv_path)).rows.size(); }

}  // namespace

TEST_F(CliTest, OptimizeWritesScheduleAndReport) {
  const std::string fields = make_fields();
  const json doc = json::parse(io::read_text(fields));
  EXPECT_EQ(doc["n_pulses"], 20);
  EXPECT_EQ(doc["pulses"].size(), 20u);
  EXPECT_TRUE(doc.contains("report"));
  EXPECT_EQ(doc["report"]["seed"], 7);
  const io::ScheduleFile f = io::read_schedule(fields);
  EXPECT_EQ(doc["report"]["best_fidelity_at_nominal"].get<double>(), objective_standard(SystemConfig{}, f.schedule));
}

TEST_F(CliTest, OptimizeEchoesPhysicalUnits) {
  const CliRun r = invoke({"optimize", "--starts", "1", "--seed", "3", "--out", path("f.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("139.33"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("130 MHz"), std::string::npos) << r.out;
}

TEST_F(CliTest, SweepStaticCsvAndPlot) {
  const std::string fields = make_fields();
  const CliRun r = invoke({"sweep-static", "--fields", fields, "--delta-max", "0.1", "--delta-step", "0.02", "--n", "40",
                     "--seed", "11", "--out", path("static.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = io::read_text(path("static.csv"));
  EXPECT_NE(csv.find("\ndelta,mean_fidelity,std_error,n\n"), std::string::npos);
  EXPECT_NE(csv.find("# seed: 11"), std::string::npos);
  EXPECT_NE(csv.find("# config_hash: "), std::string::npos);
  EXPECT_EQ(data_rows(path("static.csv")), 6u);

  ASSERT_EQ(invoke({"plot", "--in", path("static.csv"), "--out", path("static.svg")}).code, 0);
  const std::string svg = io::read_text(path("static.svg"));
  const std::regex re("points=\"([^\"]*)\"");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, re));
  const std::string pts = m[1];
  EXPECT_EQ(std::count(pts.begin(), pts.end(), ' ') + 1, 6);
  ASSERT_EQ(invoke({"plot", "--in", path("static.csv"), "--out", path("again.svg")}).code, 0);
  EXPECT_EQ(svg, io::read_text(path("again.svg")));

  // Same seed, different thread count: identical bytes.
  ASSERT_EQ(invoke({"sweep-static", "--fields", fields, "--delta-max", "0.1", "--delta-step", "0.02", "--n", "40",
                 "--seed", "11", "--threads", "3", "--out", path("static3.csv")})
                .code,
            0);
  EXPECT_EQ(without_command(csv), without_command(io::read_text(path("static3.csv"))));
}

TEST_F(CliTest, SweepDynamicCurveConverge) {
  const std::string fields = make_fields();
  CliRun r = invoke({"sweep-dynamic", "--fields", fields, "--sigma-max", "0.2", "--sigma-step", "0.1", "--tgfc", "1,200",
               "--n", "20", "--seed", "5", "--out", path("dyn.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const io::CsvTable dyn = io::parse_csv(io::read_text(path("dyn.csv")));
  EXPECT_EQ(dyn.header, (std::vector<std::string>{"tgfc", "sigma", "mean_fidelity", "std_error", "n"}));
  EXPECT_EQ(dyn.rows.size(), 6u);
  ASSERT_EQ(invoke({"plot", "--in", path("dyn.csv"), "--out", path("dyn.svg")}).code, 0);
  const std::string svg = io::read_text(path("dyn.svg"));
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("data-group=\"200\""), std::string::npos);

  r = invoke({"curve", "--fields", fields, "--j-min", "0.9", "--j-max", "1.1", "--j-step", "0.1", "--seed", "1", "--out",
           path("curve.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const io::CsvTable curve = io::parse_csv(io::read_text(path("curve.csv")));
  EXPECT_EQ(curve.header, (std::vector<std::string>{"j_over_jbar", "fidelity"}));
  ASSERT_EQ(curve.rows.size(), 3u);
  EXPECT_EQ(curve.rows[1][1], objective_standard(SystemConfig{}, io::read_schedule(fields).schedule));

  r = invoke({"converge", "--steps", "10,100", "--trials", "10", "--seed", "2", "--out", path("conv.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("slope"), std::string::npos);
  EXPECT_EQ(data_rows(path("conv.csv")), 2u);
}

TEST_F(CliTest, CompareRobustOnSmallGrid) {
  const std::string fields = make_fields();
  io::write_text(path("cfg.json"), R"({"weighted": {"grid_points": 7, "delta1": 0.04}, "smoothed": {"grid_points": 7}})");
  const CliRun r = invoke({"compare-robust", "--config", path("cfg.json"), "--standard-fields", fields, "--weighted-starts",
                     "1", "--n", "50", "--seed", "4", "--out-dir", dir_.string(), "--prefix", "cmp"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"cmp_standard.json", "cmp_weighted.json", "cmp_smoothed.json", "cmp_curve_standard.csv",
                        "cmp_curve_weighted.csv", "cmp_curve_smoothed.csv", "cmp_comparison.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  const std::string table = io::read_text(path("cmp_comparison.csv"));
  EXPECT_NE(table.find("\nstandard,"), std::string::npos) << table;
  EXPECT_NE(table.find("\nsmoothed,"), std::string::npos) << table;
}

TEST_F(CliTest, OutputDirectoryPrecedence) {
  const fs::path env_dir = dir_ / "env";
  const fs::path flag_dir = dir_ / "flag";
  const fs::path cfg_dir = dir_ / "cfg";
  io::write_text(path("cfg.json"), json{{"output_dir", cfg_dir.string()}}.dump());
  const std::vector<std::string> base{"converge", "--config", path("cfg.json"), "--steps", "10", "--trials", "2",
                                      "--seed", "1", "--out", "c.csv"};

  ASSERT_EQ(invoke(base).code, 0);
  EXPECT_TRUE(fs::exists(cfg_dir / "c.csv"));

  setenv("TOFFOLI_OUTPUT_DIR", env_dir.c_str(), 1);
  ASSERT_EQ(invoke(base).code, 0);
  EXPECT_TRUE(fs::exists(env_dir / "c.csv"));

  auto with_flag = base;
  with_flag.push_back("--out-dir");
  with_flag.push_back(flag_dir.string());
  ASSERT_EQ(invoke(with_flag).code, 0);
  EXPECT_TRUE(fs::exists(flag_dir / "c.csv"));
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  EXPECT_EQ(invoke({"optimize", "--bogus"}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);

  const CliRun no_seed = invoke({"converge", "--steps", "10", "--trials", "2", "--out", path("c.csv")});
  EXPECT_EQ(no_seed.code, 2);
  EXPECT_NE(no_seed.err.find("seed"), std::string::npos);

  io::write_text(path("bad.json"), R"({"n_pulses": 3, "u_max": 1, "pulses": [[0,0,0],[0,0,0],[0,0,0]]})");
  EXPECT_EQ(invoke({"curve", "--fields", path("bad.json"), "--seed", "1", "--out", path("x.csv")}).code, 2);

  io::write_text(path("big.json"), R"({"n_pulses": 2, "u_max": 9, "pulses": [[0,0,0],[0,8,0]]})");
  io::write_text(path("cfg.json"), R"({"system": {"n_pulses": 2}})");
  const CliRun big = invoke({"curve", "--config", path("cfg.json"), "--fields", path("big.json"), "--seed", "1", "--out",
                       path("x.csv")});
  EXPECT_EQ(big.code, 2);
  EXPECT_NE(big.err.find("row 1"), std::string::npos) << big.err;

  io::write_text(path("unknown.json"), R"({"sed": 3})");
  EXPECT_EQ(invoke({"converge", "--config", path("unknown.json"), "--seed", "1"}).code, 2);
  EXPECT_EQ(invoke({"optimize", "--seed", "1", "--objective", "best"}).code, 2);
}

TEST_F(CliTest, HelpExitsZero) {
  const CliRun r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sweep-dynamic"), std::string::npos);
}

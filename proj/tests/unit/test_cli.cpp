#include "drdcbf/cli.hpp"
#include "drdcbf/scenario.hpp"
#include "drdcbf/sim.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace drdcbf;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "drdcbf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(DRDCBF_TEST_DATA) + "/" + name; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("drdcbf_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesCsvAndSummary) {
  const auto r = run({"simulate", "--config", bundled_scenario_path("unicycle_ellipse"),
                      "--horizon", "2", "--out", dir_.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const fs::path csv = dir_ / "unicycle_ellipse.csv";
  ASSERT_TRUE(fs::exists(csv));
  const Trajectory t = read_csv_file(csv.string());
  EXPECT_EQ(t.size(), 2001u);
  EXPECT_GE(t.min_h0(), 0.0);
  const auto summary = nlohmann::json::parse(read_file(dir_ / "unicycle_ellipse.json"));
  EXPECT_DOUBLE_EQ(summary.at("scenario").at("horizon").get<double>(), 2.0);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  const auto bad_lambda = run({"simulate", "--config", data("bad_lambda.json"), "--out", dir_.string()});
  EXPECT_EQ(bad_lambda.code, kExitConfig);
  EXPECT_NE(bad_lambda.err.find("lambda >= gamma + epsilon*mu/(4*beta)"), std::string::npos);
  EXPECT_TRUE(fs::is_empty(dir_));

  EXPECT_EQ(run({"simulate", "--config", data("missing_model_id.json")}).code, kExitConfig);
  EXPECT_EQ(run({"simulate", "--config", (dir_ / "nope.json").string()}).code, kExitConfig);
  EXPECT_EQ(run({"sweep", "--config", bundled_scenario_path("unicycle_ellipse"), "--out",
                 dir_.string()}).code,
            kExitConfig);
  EXPECT_EQ(run({"verify", "--config", data("empty_suites.json")}).code, kExitConfig);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitConfig);
  EXPECT_EQ(run({"simulate"}).code, kExitConfig);
  EXPECT_EQ(run({"launch"}).code, kExitConfig);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, VerifyReportsAndMutationFails) {
  const fs::path report = dir_ / "report.json";
  const auto ok = run({"verify", "--config", bundled_scenario_path("unicycle_ellipse"), "--out",
                       report.string()});
  EXPECT_EQ(ok.code, kExitOk) << ok.out << ok.err;
  const auto j = nlohmann::json::parse(read_file(report));
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_FALSE(j.at("suites").empty());

  const auto mutated = run({"verify", "--config", data("mutation_obstacle.json")});
  EXPECT_EQ(mutated.code, kExitFailure);
  EXPECT_EQ(mutated.out.rfind("FAIL ", 0), 0u) << mutated.out;
}

TEST_F(CliTest, PlotRoundTrip) {
  ASSERT_EQ(run({"simulate", "--config", bundled_scenario_path("unicycle_obstacle"), "--horizon",
                 "3", "--out", dir_.string()})
                .code,
            kExitOk);
  const fs::path csv = dir_ / "unicycle_obstacle.csv";
  const std::string before = read_file(csv);
  const fs::path prefix = dir_ / "fig";
  const auto r = run({"plot", csv.string(), (dir_ / "unicycle_obstacle_unfiltered.csv").string(),
                      "--config", bundled_scenario_path("unicycle_obstacle"), "--out",
                      prefix.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* suffix : {"_path.svg", "_cert.svg"}) {
    const std::string svg = read_file(prefix.string() + suffix);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
  }
  EXPECT_EQ(read_file(csv), before);
}

TEST_F(CliTest, PlotRejectsBadInput) {
  const fs::path header_only = dir_ / "empty.csv";
  std::ofstream(header_only) << "t,x,y,theta,u0,u1,h,h0,V,e_norm,slack,active,region\n";
  EXPECT_EQ(run({"plot", header_only.string(), "--out", (dir_ / "a").string()}).code, kExitConfig);

  const fs::path garbage = dir_ / "garbage.csv";
  std::ofstream(garbage) << "time,position\n0,1\n";
  EXPECT_EQ(run({"plot", garbage.string(), "--out", (dir_ / "b").string()}).code, kExitConfig);
  EXPECT_EQ(run({"plot", (dir_ / "missing.csv").string()}).code, kExitConfig);
}

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "json.hpp"

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() / "curvlam_cli_test";
  std::filesystem::create_directories(dir);
  const auto out = dir / ("out" + std::to_string(counter) + ".txt");
  const auto err = dir / ("err" + std::to_string(counter++) + ".txt");
  const std::string cmd = env + " \"" CURVLAM_CLI "\" " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

}  // namespace

TEST(Cli, Propagate) {
  const CliRun r = run("propagate --spec kepler:flat --q 1,0 --v 0,1 --dt 1.5707963267948966");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["end"]["chart_q"][0].get<double>(), 0.0, 1e-9);
  EXPECT_NEAR(j["end"]["chart_q"][1].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(j["energy_end"].get<double>(), -0.5, 1e-9);
}

TEST(Cli, Solve) {
  const CliRun r = run("solve --spec hooke:sphere --a 0.5,0 --b 0,0.5 --energy 0.8 --guess 1.57,1.5");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  for (const char* key : {"psi", "dt", "S", "w", "v_a", "v_b", "iterations", "miss"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_NEAR(j["dt"].get<double>(), 1.408278, 1e-6);
}

TEST(Cli, Project) {
  const CliRun r = run("project --spec kepler:flat --target sphere --q 1,0 --v 0,1 --dt 1.5707963267948966");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["dt_curved"].get<double>(), std::acos(-1.0) / 4, 1e-9);
  EXPECT_LT(j["endpoint_residual"].get<double>(), 1e-8);
}

TEST(Cli, Flow) {
  const CliRun r = run("flow --spec kepler:flat --a 1,0 --b 0,1 --span 0.1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LT(j["max_invariant_drift"].get<double>(), 1e-10);
  EXPECT_FALSE(j["truncated"].get<bool>());
}

TEST(Cli, VerifyWritesCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "curvlam_cli_csv";
  std::filesystem::remove_all(dir);
  const CliRun r = run("verify --config \"" CURVLAM_CONFIG_DIR "/kepler_flat.json\" --no-timestamp --csv-dir " +
                    dir.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["schema"], 1);
  int files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    ++files;
    const std::string text = slurp(entry.path());
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "s,A_x,A_y,B_x,B_y,invariant1,invariant2,solved,dt,S,w,defect,iterations");
  }
  EXPECT_EQ(files, 3);
}

TEST(Cli, VerifyNegativeControlFails) {
  const CliRun r = run("verify --no-timestamp --config \"" CURVLAM_CONFIG_DIR "/negative_control.json\"");
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(nlohmann::json::parse(r.out)["pass"].get<bool>());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("propagate --spec kepler:moon --q 1,0 --v 0,1 --dt 1").code, 2);
  EXPECT_EQ(run("propagate --spec kepler:flat --q 1 --v 0,1 --dt 1").code, 2);
  EXPECT_EQ(run("propagate --spec kepler:flat --q 1,0 --v 0,1 --dt -1").code, 2);
  EXPECT_EQ(run("verify --config /nonexistent.json").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, RuntimeFailure) {
  // Radial fall into the centre.
  EXPECT_EQ(run("propagate --spec kepler:flat --q 1,0 --v -0.1,0 --dt 5").code, 1);
}

TEST(Cli, LogLevel) {
  const std::string args = "propagate --spec hooke:flat --q 1,0 --v 0,1 --dt 1";
  EXPECT_TRUE(run(args).err.empty());
  EXPECT_FALSE(run(args, "CURVLAM_LOG=debug").err.empty());
}

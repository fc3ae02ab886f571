/* Copyright 2026 The Podscale Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Runs the podscale binary and checks exit codes and output.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "gtest/gtest.h"

namespace {

struct CliRun {
  int exit = -1;
  std::string out;
};

std::string SourceDir() {
  const char* dir = std::getenv("PODSCALE_SOURCE_DIR");
  return dir == nullptr ? "." : dir;
}

std::string Scenario(const std::string& name) {
  return SourceDir() + "/scenarios/" + name;
}

// stdout and stderr together.
CliRun Podscale(const std::string& args) {
  const std::string cmd =
      absl::StrCat("'", PODSCALE_CLI_PATH, "' ", args, " 2>&1");
  CliRun run;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return run;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    run.out.append(buf.data(), n);
  }
  const int status = pclose(pipe);
  run.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return run;
}

std::filesystem::path TempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(CliTest, HelpExitsZero) {
  const CliRun r = Podscale("--help");
  EXPECT_EQ(r.exit, 0);
  EXPECT_TRUE(absl::StrContains(r.out, "shuffle-sim"));
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Podscale("").exit, 2);
  EXPECT_EQ(Podscale("frobnicate").exit, 2);
  EXPECT_EQ(Podscale("verify").exit, 2);
  EXPECT_EQ(
      Podscale("verify --config " + Scenario("default.json") + " --format xml")
          .exit,
      2);
  EXPECT_EQ(Podscale("verify --config " + Scenario("default.json") +
                     " --seed notanumber")
                .exit,
            2);
}

TEST(CliTest, MissingConfigExitsTwo) {
  const CliRun r = Podscale("plan --config /nonexistent/x.json");
  EXPECT_EQ(r.exit, 2);
  EXPECT_TRUE(absl::StrContains(r.out, "error:"));
}

TEST(CliTest, InvalidConfigExitsTwo) {
  const auto path = TempPath("podscale_cli_bad.json");
  std::ofstream(path) << R"({"mesh": {"pod_x": 4, "pod_y": 4, "bogus": 1}})";
  const CliRun r = Podscale("plan --config " + path.string());
  EXPECT_EQ(r.exit, 2);
  EXPECT_TRUE(absl::StrContains(r.out, "mesh.bogus")) << r.out;
  std::filesystem::remove(path);
}

TEST(CliTest, VerifyPasses) {
  const CliRun r = Podscale("verify --config " + Scenario("default.json"));
  EXPECT_EQ(r.exit, 0) << r.out;
  EXPECT_TRUE(absl::StrContains(r.out, "# seed: 0"));
}

TEST(CliTest, GlobalFlagsInEitherPosition) {
  const CliRun before =
      Podscale("--seed 5 metrics --config " + Scenario("default.json"));
  const CliRun after =
      Podscale("metrics --config " + Scenario("default.json") + " --seed 5");
  EXPECT_EQ(before.exit, 0) << before.out;
  EXPECT_EQ(after.exit, 0) << after.out;
  EXPECT_TRUE(absl::StrContains(before.out, "# seed: 5"));
  EXPECT_TRUE(absl::StrContains(after.out, "# seed: 5"));
}

TEST(CliTest, TableFormat) {
  const CliRun r = Podscale("shuffle-sim --format table --config " +
                            Scenario("default.json"));
  EXPECT_EQ(r.exit, 0);
  EXPECT_TRUE(absl::StrContains(r.out, "file_order  "));
  EXPECT_FALSE(absl::StrContains(r.out, "file_order,"));
}

TEST(CliTest, SimulateThenReport) {
  const auto sweep = TempPath("podscale_cli_sweep.csv");
  const auto report = TempPath("podscale_cli_report.csv");
  const CliRun sim =
      Podscale("simulate --config " + Scenario("epoch_budget.json") +
               " --out " + sweep.string());
  ASSERT_EQ(sim.exit, 0) << sim.out;
  const CliRun rep =
      Podscale("report " + sweep.string() + " --out " + report.string());
  ASSERT_EQ(rep.exit, 0) << rep.out;
  const std::string text = ReadFile(report);
  EXPECT_TRUE(absl::StrContains(text, "step_speedup_vs_256"));
  EXPECT_TRUE(absl::StrContains(text, "4096,65536,88,"));
  std::filesystem::remove(sweep);
  std::filesystem::remove(report);
}

TEST(CliTest, ReportNeedsInputs) {
  EXPECT_EQ(Podscale("report").exit, 2);
  EXPECT_EQ(Podscale("report /nonexistent.csv").exit, 2);
}

TEST(CliTest, CalibrationMissExitsOne) {
  const auto path = TempPath("podscale_cli_calib.json");
  std::ofstream(path) << R"({
    "mesh": {"pods": 1, "pod_x": 4, "pod_y": 4},
    "compute": {"work_per_example": 1e9, "flops_rate": 1e13},
    "sweep": [{"chips": 16, "batch": 256}],
    "calibration": {"chips": 16, "target_fraction": 0.99, "tolerance": 0.001}
  })";
  const CliRun r = Podscale("simulate --config " + path.string());
  EXPECT_EQ(r.exit, 1) << r.out;
  EXPECT_TRUE(absl::StrContains(r.out, "verification failed"));
  std::filesystem::remove(path);
}

}  // namespace

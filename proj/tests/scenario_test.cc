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

#include "podscale/scenario.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gtest/gtest.h"

namespace podscale {
namespace {

std::string SourceDir() {
  const char* dir = std::getenv("PODSCALE_SOURCE_DIR");
  return dir == nullptr ? "." : dir;
}

absl::Status ParseError(absl::string_view text) {
  return ParseScenario(text).status();
}

TEST(ScenarioTest, MinimalUsesDefaults) {
  auto s = ParseScenario(R"({"mesh": {"pod_x": 4, "pod_y": 4}})");
  ASSERT_TRUE(s.ok()) << s.status();
  EXPECT_EQ(s->mesh.pod_x, 4);
  EXPECT_EQ(s->mesh.pods, 1);
  EXPECT_TRUE(s->mesh.y_torus);
  EXPECT_EQ(s->stride, 1);
  EXPECT_EQ(s->shuffle, ShuffleConfig{});
  EXPECT_EQ(s->metrics, MetricsConfig{});
  EXPECT_EQ(s->verify, VerifyConfig{});
  auto mesh = s->mesh.Build();
  ASSERT_TRUE(mesh.ok());
  EXPECT_EQ(mesh->num_devices(), 16);
}

TEST(ScenarioTest, CommentsAreAllowed) {
  auto s = ParseScenario(R"(// leading comment
{
  "name": "c", /* inline */
  "mesh": {"pod_x": 2, "pod_y": 2}
})");
  ASSERT_TRUE(s.ok()) << s.status();
  EXPECT_EQ(s->name, "c");
}

TEST(ScenarioTest, MissingMesh) {
  const absl::Status st = ParseError(R"({"name": "x"})");
  EXPECT_EQ(st.code(), absl::StatusCode::kInvalidArgument);
  EXPECT_NE(st.message().find("mesh"), std::string::npos);
}

TEST(ScenarioTest, UnknownKeyReportsPath) {
  const absl::Status st =
      ParseError(R"({"mesh": {"pod_x": 2, "pod_y": 2, "podz": 1}})");
  EXPECT_FALSE(st.ok());
  EXPECT_NE(st.message().find("unknown key: mesh.podz"), std::string::npos)
      << st.message();
  const absl::Status top = ParseError(R"({"mesh": {}, "extra": 1})");
  EXPECT_NE(top.message().find("extra"), std::string::npos);
}

TEST(ScenarioTest, TypeErrorsReportPath) {
  const absl::Status st = ParseError(R"({"mesh": {"pod_x": "eight"}})");
  EXPECT_FALSE(st.ok());
  EXPECT_NE(st.message().find("mesh.pod_x"), std::string::npos) << st.message();
  const absl::Status frac = ParseError(R"({"mesh": {"pod_x": 2.5}})");
  EXPECT_FALSE(frac.ok());
}

TEST(ScenarioTest, StrideMustDivideX) {
  const absl::Status st =
      ParseError(R"({"mesh": {"pod_x": 8, "pod_y": 2}, "stride": 3})");
  EXPECT_FALSE(st.ok());
  EXPECT_NE(st.message().find("stride"), std::string::npos) << st.message();
}

TEST(ScenarioTest, RangeChecks) {
  EXPECT_FALSE(ParseError(R"({"mesh": {"pod_x": 0, "pod_y": 2}})").ok());
  EXPECT_FALSE(ParseError(R"({"mesh": {"pod_x": 2, "pod_y": 2},
                              "metrics": {"devices": 0}})")
                   .ok());
  EXPECT_FALSE(ParseError(R"({"mesh": {"pod_x": 2, "pod_y": 2},
                              "shuffle": {"buffer_sizes": [0]}})")
                   .ok());
  EXPECT_FALSE(ParseError(R"({"mesh": {"pod_x": 2, "pod_y": 2},
                              "payload": {"elem_type": "f16"}})")
                   .ok());
  EXPECT_FALSE(ParseError(R"({"mesh": {"pod_x": 2, "pod_y": 2},
                              "optimizer": {"kind": "adamw"}})")
                   .ok());
}

TEST(ScenarioTest, EpochTableRejectsDuplicates) {
  const absl::Status st = ParseError(R"({"mesh": {"pod_x": 2, "pod_y": 2},
      "epochs": [{"batch": 8, "epochs": 1}, {"batch": 8, "epochs": 2}]})");
  EXPECT_FALSE(st.ok());
  EXPECT_NE(st.message().find("epochs"), std::string::npos);
}

TEST(ScenarioTest, MalformedJson) {
  EXPECT_FALSE(ParseError("{").ok());
  EXPECT_FALSE(ParseError("[1, 2]").ok());
  EXPECT_FALSE(ParseError("").ok());
}

TEST(ScenarioTest, BundledScenariosRoundTrip) {
  const std::filesystem::path dir =
      std::filesystem::path(SourceDir()) / "scenarios";
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    auto s = LoadScenario(entry.path().string());
    ASSERT_TRUE(s.ok()) << entry.path() << ": " << s.status();
    auto again = ParseScenario(SerializeScenario(*s));
    ASSERT_TRUE(again.ok()) << again.status();
    EXPECT_EQ(*again, *s) << entry.path();
    EXPECT_EQ(ScenarioHash(*again), ScenarioHash(*s));
    EXPECT_EQ(ScenarioHash(*s).size(), 16u);
  }
  EXPECT_GE(seen, 4);
}

TEST(ScenarioTest, HashChangesWithContent) {
  auto a = ParseScenario(R"({"mesh": {"pod_x": 2, "pod_y": 2}})");
  auto b = ParseScenario(R"({"mesh": {"pod_x": 2, "pod_y": 2}, "stride": 2})");
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_NE(ScenarioHash(*a), ScenarioHash(*b));
}

TEST(ScenarioTest, LoadMissingFile) {
  const auto s = LoadScenario("/nonexistent/podscale.json");
  EXPECT_EQ(s.status().code(), absl::StatusCode::kNotFound);
}

TEST(ScenarioTest, ToScalingCarriesSweep) {
  auto s = LoadScenario(SourceDir() + "/scenarios/epoch_budget.json");
  ASSERT_TRUE(s.ok()) << s.status();
  EXPECT_EQ(s->sweep.size(), 2u);
  EXPECT_EQ(*s->epochs.EpochsFor(4096), 44.0);
  const ScalingScenario scaling = s->ToScaling();
  EXPECT_EQ(scaling.pod_x, 32);
}

}  // namespace
}  // namespace podscale

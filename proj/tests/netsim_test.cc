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

#include "podscale/netsim.h"

#include <cmath>

#include "gtest/gtest.h"

namespace podscale {
namespace {

DeviceMesh YRingMesh(int p) {
  absl::StatusOr<DeviceMesh> mesh =
      DeviceMesh::Create(1, p, 1, /*y_torus=*/true);
  EXPECT_TRUE(mesh.ok());
  return *mesh;
}

TEST(SimulateScheduleTest, SinglePhaseHalvesPayload) {
  const DeviceMesh mesh = YRingMesh(2);
  CollectiveSchedule schedule;
  schedule.Add(ReduceScatterPhase({*RingY(mesh, 0)}, 1000, ElemType::kF32,
                                  Direction::kUnidirectional));
  absl::StatusOr<SimulationResult> r =
      SimulateSchedule(mesh, schedule, LinkCostModel::Uniform(0.0, 1e-9));
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_DOUBLE_EQ(r->seconds, 0.5 * 4000 * 1e-9);
  ASSERT_EQ(r->timeline.size(), 1u);
  EXPECT_EQ(r->timeline[0].start, 0.0);
  EXPECT_EQ(r->timeline[0].end, r->seconds);
}

TEST(SimulateScheduleTest, EmptySchedule) {
  absl::StatusOr<SimulationResult> r = SimulateSchedule(
      YRingMesh(4), CollectiveSchedule(), LinkCostModel::Uniform(1.0, 1.0));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->seconds, 0.0);
  EXPECT_TRUE(r->timeline.empty());
}

TEST(SimulateScheduleTest, SeamRingIsSlower) {
  absl::StatusOr<DeviceMesh> mesh = BuildMultipod(2, 4, 1, false);
  ASSERT_TRUE(mesh.ok());
  LinkCostModel cost = LinkCostModel::Uniform(1e-6, 1e-9);
  cost.alpha[static_cast<int>(LinkClass::kCrossPod)] = 2e-6;
  auto time_of = [&](std::vector<Coord> ring) {
    CollectiveSchedule s = RingAllReduceSchedule(ring, 64, ElemType::kF32,
                                                 Direction::kBidirectional);
    return SimulateSchedule(*mesh, s, cost)->seconds;
  };
  const double inside = time_of({{0, 0}, {1, 0}});
  const double seam = time_of({{3, 0}, {4, 0}});
  EXPECT_GT(seam, inside);
}

TEST(SimulateScheduleTest, Errors) {
  const DeviceMesh mesh = YRingMesh(2);
  CollectiveSchedule outside;
  outside.Add(ReduceScatterPhase({{{0, 0}, {0, 5}}}, 8, ElemType::kF32,
                                 Direction::kUnidirectional));
  EXPECT_FALSE(
      SimulateSchedule(mesh, outside, LinkCostModel::Uniform(0, 1)).ok());
  LinkCostModel bad = LinkCostModel::Uniform(1.0, 1.0);
  bad.alpha[static_cast<int>(LinkClass::kCrossPod)] = 0.5;
  EXPECT_FALSE(bad.Validate().ok());
  EXPECT_FALSE(LinkCostModel::Uniform(-1.0, 0.0).Validate().ok());
  EXPECT_FALSE(LinkCostModel::Uniform(0.0, NAN).Validate().ok());
}

TEST(AnalyticRingTimeTest, Examples) {
  EXPECT_EQ(AnalyticRingTime(1, 100, 1, 1, Direction::kUnidirectional), 0.0);
  EXPECT_EQ(AnalyticRingTime(4, 4, 0, 1, Direction::kUnidirectional), 6.0);
  EXPECT_EQ(AnalyticRingTime(4, 4, 0, 1, Direction::kBidirectional), 3.0);
  EXPECT_EQ(AnalyticRingTime(4, 4, 1, 0, Direction::kBidirectional), 6.0);
}

TEST(AnalyticRingTimeTest, SimulatorMatchesExactlyOnGrid) {
  const double alpha = 1.7e-6;
  const double beta = 3.1e-10;
  for (int p = 1; p <= 64; ++p) {
    const DeviceMesh mesh = YRingMesh(p);
    const std::vector<Coord> ring = *RingY(mesh, 0);
    for (int64_t n = 1; n <= 1024; n += (n < 64 ? 1 : 37)) {
      for (Direction dir :
           {Direction::kUnidirectional, Direction::kBidirectional}) {
        const CollectiveSchedule s =
            RingAllReduceSchedule(ring, n, ElemType::kF32, dir);
        const double sim =
            SimulateSchedule(mesh, s, LinkCostModel::Uniform(alpha, beta))
                ->seconds;
        const double bytes = static_cast<double>(PaddedLength(n, p) * 4);
        ASSERT_EQ(sim, AnalyticRingTime(p, bytes, alpha, beta, dir))
            << "p=" << p << " n=" << n;
      }
    }
  }
}

TEST(SimulateScheduleTest, MonotoneInAlphaBetaAndSize) {
  const DeviceMesh mesh = YRingMesh(8);
  const std::vector<Coord> ring = *RingY(mesh, 0);
  double previous = -1.0;
  for (int64_t n : {8, 64, 512, 4096}) {
    for (double scale : {1.0, 2.0, 4.0}) {
      const double t =
          SimulateSchedule(mesh,
                           RingAllReduceSchedule(ring, n, ElemType::kF32,
                                                 Direction::kBidirectional),
                           LinkCostModel::Uniform(1e-6 * scale, 1e-9 * scale))
              ->seconds;
      EXPECT_GE(t, previous);
      previous = t;
    }
    previous = 0.0;
  }
}

TEST(SimulateScheduleTest, Deterministic) {
  absl::StatusOr<DeviceMesh> mesh = BuildMultipod(2, 8, 8, true);
  absl::StatusOr<CollectiveSchedule> s =
      HierarchicalSchedule(*mesh, 2, 100000, ElemType::kBF16);
  const LinkCostModel cost = LinkCostModel::Uniform(1e-6, 1e-10);
  EXPECT_EQ(SimulateSchedule(*mesh, *s, cost)->seconds,
            SimulateSchedule(*mesh, *s, cost)->seconds);
}

TEST(ComputeModelTest, StepSeconds) {
  ComputeModel m{
      .work_per_example = 10.0, .flops_rate = 5.0, .fixed_overhead = 1.0};
  EXPECT_DOUBLE_EQ(m.StepSeconds(8, 4), 10.0 * 2 / 5.0 + 1.0);
  EXPECT_TRUE(m.Validate().ok());
  m.flops_rate = 0.0;
  EXPECT_FALSE(m.Validate().ok());
}

TEST(EpochTableTest, Lookup) {
  const EpochTable table({{4096, 44.0}, {65536, 88.0}});
  EXPECT_EQ(*table.EpochsFor(65536), 88.0);
  EXPECT_EQ(*table.EpochsFor(4096), 44.0);
  absl::StatusOr<double> missing = table.EpochsFor(8192);
  ASSERT_FALSE(missing.ok());
  EXPECT_NE(missing.status().message().find("4096->44"),
            absl::string_view::npos);
  EXPECT_NE(missing.status().message().find("65536->88"),
            absl::string_view::npos);
}

TEST(EpochTableTest, EndToEndSpeedupHalvesAtLargeBatch) {
  const double throughput = EndToEndSpeedup(4096, 2.0, 1.0, 65536, 3.0, 1.0);
  const double e2e = EndToEndSpeedup(4096, 2.0, 44.0, 65536, 3.0, 88.0);
  EXPECT_EQ(e2e, throughput * (44.0 / 88.0));
}

TEST(MeshForChipsTest, Shapes) {
  EXPECT_EQ(MeshForChips(4096, 32, 32)->x_size(), 128);
  EXPECT_EQ(MeshForChips(1024, 32, 32)->x_size(), 32);
  absl::StatusOr<DeviceMesh> m512 = MeshForChips(512, 32, 32);
  EXPECT_EQ(m512->x_size(), 16);
  EXPECT_EQ(m512->y_size(), 32);
  EXPECT_TRUE(m512->y_torus());
  absl::StatusOr<DeviceMesh> m16 = MeshForChips(16, 32, 32);
  EXPECT_EQ(m16->x_size(), 4);
  EXPECT_EQ(m16->y_size(), 4);
  EXPECT_FALSE(m16->y_torus());
  EXPECT_EQ(MeshForChips(1, 32, 32)->num_devices(), 1);
  EXPECT_FALSE(MeshForChips(1536 + 1, 32, 32).ok());
  EXPECT_FALSE(MeshForChips(1500, 32, 32).ok());
  EXPECT_FALSE(MeshForChips(0, 32, 32).ok());
}

ScalingScenario AlphaZeroScenario() {
  ScalingScenario s;
  s.payload_elements = 1 << 22;
  s.cost = LinkCostModel::Uniform(0.0, 1e-10);
  s.compute = {
      .work_per_example = 1e9, .flops_rate = 1e12, .fixed_overhead = 0.0};
  for (int64_t chips : {512, 1024, 2048, 4096})
    s.points.push_back({chips, 65536});
  return s;
}

TEST(SweepScalingTest, ComputeHalvesAllReduceFlat) {
  absl::StatusOr<std::vector<StepBreakdown>> rows =
      SweepScaling(AlphaZeroScenario());
  ASSERT_TRUE(rows.ok()) << rows.status();
  ASSERT_EQ(rows->size(), 4u);
  for (size_t i = 1; i < rows->size(); ++i) {
    const StepBreakdown& a = (*rows)[i - 1];
    const StepBreakdown& b = (*rows)[i];
    EXPECT_NEAR(b.compute_time / a.compute_time, 0.5, 0.005);
    EXPECT_NEAR(b.allreduce_time / a.allreduce_time, 1.0, 0.01);
  }
}

TEST(SweepScalingTest, SingleChipHasNoAllReduce) {
  ScalingScenario s = AlphaZeroScenario();
  s.points = {{1, 32}};
  absl::StatusOr<std::vector<StepBreakdown>> rows = SweepScaling(s);
  ASSERT_TRUE(rows.ok());
  EXPECT_EQ((*rows)[0].allreduce_time, 0.0);
  EXPECT_EQ((*rows)[0].allreduce_fraction(), 0.0);
}

TEST(SweepScalingTest, AmdahlBound) {
  ScalingScenario s = AlphaZeroScenario();
  s.cost = LinkCostModel::Uniform(1e-6, 1e-10);
  s.points.clear();
  for (int64_t chips = 1; chips <= 4096; chips *= 2)
    s.points.push_back({chips, 4096});
  absl::StatusOr<std::vector<StepBreakdown>> rows = SweepScaling(s);
  ASSERT_TRUE(rows.ok());
  const double base = rows->front().step_time();
  for (const StepBreakdown& r : *rows) {
    if (r.allreduce_time > 0) {
      EXPECT_LE(r.throughput_speedup, base / r.allreduce_time);
    }
    EXPECT_GE(r.allreduce_fraction(), 0.0);
    EXPECT_LE(r.allreduce_fraction(), 1.0);
  }
}

TEST(SweepScalingTest, EpochTableFeedsEndToEnd) {
  ScalingScenario s = AlphaZeroScenario();
  s.epochs = EpochTable({{4096, 44.0}, {65536, 88.0}});
  s.points = {{256, 4096}, {4096, 65536}};
  absl::StatusOr<std::vector<StepBreakdown>> rows = SweepScaling(s);
  ASSERT_TRUE(rows.ok());
  const StepBreakdown& big = (*rows)[1];
  EXPECT_EQ(big.e2e_speedup, big.throughput_speedup * 0.5);
  s.points = {{256, 8192}};
  EXPECT_FALSE(SweepScaling(s).ok());
  s.points = {{1500, 8192}};
  s.epochs = EpochTable();
  EXPECT_FALSE(SweepScaling(s).ok());
}

TEST(BreakdownCsvTest, HeaderAndRows) {
  StepBreakdown row{
      .chips = 16, .batch = 256, .compute_time = 3.0, .allreduce_time = 1.0};
  const std::string csv = BreakdownCsv({row});
  EXPECT_EQ(
      csv.substr(0, csv.find('\n')),
      "chips,batch,epochs,compute_s,allreduce_s,step_s,allreduce_fraction,"
      "throughput_speedup,e2e_speedup");
  EXPECT_NE(csv.find("16,256,1,3,1,4,0.25,1,1"), std::string::npos) << csv;
}

}  // namespace
}  // namespace podscale

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

#include "podscale/sharding.h"

#include <random>
#include <set>

#include "gtest/gtest.h"
#include "oracles.h"

namespace podscale {
namespace {

OptimizerSpec Spec(OptimizerKind kind, float lr = 0.1f) {
  OptimizerSpec spec;
  spec.kind = kind;
  spec.learning_rate = lr;
  spec.weight_decay = kind == OptimizerKind::kLambLike ? 0.01f : 0.0f;
  return spec;
}

std::vector<float> RandomValues(std::mt19937_64& rng, int64_t n) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

TEST(ReplicatedUpdateTest, SgdExample) {
  const std::vector<float> w = {1.0f};
  const std::vector<std::vector<float>> grads = {{1.0f}, {1.0f}};
  absl::StatusOr<std::vector<float>> out = ReplicatedUpdate(
      w, grads, 1, Spec(OptimizerKind::kSgd), ParamLayout(), nullptr);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ((*out)[0], 1.0f - 0.1f * 2.0f);
}

TEST(ReplicatedUpdateTest, ZeroGradientKeepsWeights) {
  const std::vector<float> w = {0.5f, -3.0f};
  const std::vector<std::vector<float>> grads(3, std::vector<float>(2, 0.0f));
  EXPECT_EQ(*ReplicatedUpdate(w, grads, 3, Spec(OptimizerKind::kSgd),
                              ParamLayout(), nullptr),
            w);
}

TEST(ReplicatedUpdateTest, MomentumTwoSteps) {
  OptimizerSpec spec = Spec(OptimizerKind::kMomentum, 0.5f);
  spec.momentum = 0.9f;
  OptimizerState state;
  std::vector<float> w = {2.0f};
  const std::vector<std::vector<float>> g1 = {{1.0f}};
  const std::vector<std::vector<float>> g2 = {{-2.0f}};
  w = *ReplicatedUpdate(w, g1, 1, spec, ParamLayout(), &state);
  w = *ReplicatedUpdate(w, g2, 1, spec, ParamLayout(), &state);
  float m = 0.0f, want = 2.0f;
  m = 0.9f * m + 1.0f;
  want = want - 0.5f * m;
  m = 0.9f * m + -2.0f;
  want = want - 0.5f * m;
  EXPECT_EQ(w[0], want);
}

TEST(ReplicatedUpdateTest, Errors) {
  const std::vector<float> w = {1.0f, 2.0f};
  EXPECT_FALSE(
      ReplicatedUpdate(w, {}, 1, Spec(OptimizerKind::kSgd), {}, nullptr).ok());
  const std::vector<std::vector<float>> short_grad = {{1.0f}};
  EXPECT_FALSE(
      ReplicatedUpdate(w, short_grad, 1, Spec(OptimizerKind::kSgd), {}, nullptr)
          .ok());
  const std::vector<std::vector<float>> three(3, std::vector<float>(2, 1.0f));
  EXPECT_FALSE(
      ReplicatedUpdate(w, three, 2, Spec(OptimizerKind::kSgd), {}, nullptr)
          .ok());
  EXPECT_FALSE(ReplicatedUpdate(w, three, 3, Spec(OptimizerKind::kSgd),
                                ParamLayout::UniformRows(3, 1), nullptr)
                   .ok());
}

TEST(ParamLayoutTest, Rows) {
  EXPECT_EQ(ParamLayout::UniformRows(10, 4).row_lengths,
            (std::vector<int64_t>{4, 4, 2}));
  EXPECT_EQ(ParamLayout::Elementwise(3).num_elements(), 3);
  EXPECT_FALSE((ParamLayout{{2, 0}}).Validate().ok());
  EXPECT_FALSE(ParamLayout{}.Validate().ok());
}

TEST(WeightUpdateShardingPlanTest, ElementwiseShardsWithinOne) {
  for (int64_t n = 1; n <= 257; n += 8) {
    for (int64_t s : {1, 2, 3, 7, 16, 64}) {
      absl::StatusOr<WeightUpdateShardingPlan> plan =
          PlanWeightUpdateSharding(ParamLayout::Elementwise(n), s);
      ASSERT_TRUE(plan.ok());
      EXPECT_EQ(plan->shard_begin.front(), 0);
      EXPECT_EQ(plan->shard_begin.back(), n);
      for (int64_t k = 0; k < s; ++k) {
        EXPECT_LE(plan->shard_begin[k], plan->shard_begin[k + 1]);
        EXPECT_LE(plan->shard_size(k), n / s + 1);
        EXPECT_GE(plan->shard_size(k), n / s);
      }
    }
  }
}

TEST(WeightUpdateShardingPlanTest, RowsNeverSplitAndPackRoundTrips) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    ParamLayout layout;
    const int rows = 1 + static_cast<int>(rng() % 12);
    for (int r = 0; r < rows; ++r) layout.row_lengths.push_back(1 + rng() % 9);
    const int64_t shards = 1 + static_cast<int64_t>(rng() % 10);
    absl::StatusOr<WeightUpdateShardingPlan> plan =
        PlanWeightUpdateSharding(layout, shards);
    ASSERT_TRUE(plan.ok());
    std::set<int64_t> starts = {0};
    int64_t pos = 0;
    for (int64_t len : layout.row_lengths) starts.insert(pos += len);
    int64_t covered = 0;
    for (int64_t k = 0; k < shards; ++k) {
      EXPECT_TRUE(starts.contains(plan->shard_begin[k]));
      int64_t rows_len = 0;
      for (int64_t len : plan->ShardRows(k)) rows_len += len;
      EXPECT_EQ(rows_len, plan->shard_size(k));
      covered += plan->shard_size(k);
    }
    EXPECT_EQ(covered, layout.num_elements());
    const std::vector<float> flat = RandomValues(rng, layout.num_elements());
    EXPECT_EQ(plan->Unpack(plan->Pack(flat)), flat);
  }
  EXPECT_FALSE(PlanWeightUpdateSharding(ParamLayout::Elementwise(4), 0).ok());
}

// Sharded weights on every device against the replicated oracle, bitwise.
void ExpectShardedMatchesReplicated(const DeviceMesh& mesh, int stride,
                                    OptimizerKind kind, std::mt19937_64& rng,
                                    int steps) {
  const OptimizerSpec spec = Spec(kind);
  std::vector<ParamLayout> layouts(stride);
  std::vector<std::vector<float>> weights(stride);
  for (int o = 0; o < stride; ++o) {
    const int64_t n = 1 + static_cast<int64_t>(rng() % 257);
    layouts[o] = kind == OptimizerKind::kLambLike
                     ? ParamLayout::UniformRows(n, 1 + rng() % 16)
                     : ParamLayout::Elementwise(n);
    weights[o] = RandomValues(rng, n);
  }
  absl::StatusOr<ShardedOptimizer> opt =
      ShardedOptimizer::Create(mesh, stride, spec, layouts);
  ASSERT_TRUE(opt.ok()) << opt.status();
  std::vector<OptimizerState> states(stride);
  for (int step = 0; step < steps; ++step) {
    std::vector<std::vector<float>> grads(mesh.num_devices());
    for (int64_t id = 0; id < mesh.num_devices(); ++id) {
      grads[id] =
          RandomValues(rng, weights[mesh.CoordOf(id).x % stride].size());
    }
    absl::StatusOr<ShardedUpdateResult> got = opt->Step(weights, grads);
    ASSERT_TRUE(got.ok()) << got.status();
    for (int o = 0; o < stride; ++o) {
      std::vector<std::vector<float>> group;
      for (int x = o; x < mesh.x_size(); x += stride) {
        for (int y = 0; y < mesh.y_size(); ++y) {
          group.push_back(grads[mesh.DeviceId({x, y})]);
        }
      }
      absl::StatusOr<std::vector<float>> want = ReplicatedUpdate(
          weights[o], group, mesh.y_size(), spec, layouts[o], &states[o]);
      ASSERT_TRUE(want.ok());
      for (int x = o; x < mesh.x_size(); x += stride) {
        for (int y = 0; y < mesh.y_size(); ++y) {
          ASSERT_EQ(got->weights[mesh.DeviceId({x, y})], *want)
              << OptimizerKindName(kind) << " " << mesh.x_size() << "x"
              << mesh.y_size() << " stride " << stride << " step " << step;
        }
      }
      weights[o] = *want;
    }
  }
}

TEST(ShardedUpdateTest, MatchesReplicatedOnGrid) {
  std::mt19937_64 rng(21);
  for (OptimizerKind kind : {OptimizerKind::kSgd, OptimizerKind::kMomentum,
                             OptimizerKind::kLambLike}) {
    for (int x : {1, 2, 4, 8}) {
      for (int y : {1, 2, 4, 8}) {
        absl::StatusOr<DeviceMesh> mesh = DeviceMesh::Create(x, y, 1, y > 1);
        ASSERT_TRUE(mesh.ok());
        for (int stride : {1, 2, 4}) {
          if (x % stride != 0) continue;
          ExpectShardedMatchesReplicated(*mesh, stride, kind, rng, 2);
        }
      }
    }
  }
}

TEST(ShardedUpdateTest, SingleDeviceIsLocalStep) {
  absl::StatusOr<DeviceMesh> mesh = DeviceMesh::Create(1, 1, 1, false);
  const std::vector<std::vector<float>> w = {{1.0f, 2.0f}};
  const std::vector<std::vector<float>> g = {{0.5f, -0.5f}};
  absl::StatusOr<ShardedUpdateResult> r =
      ShardedUpdate(*mesh, 1, w, g, Spec(OptimizerKind::kSgd));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->weights[0],
            (std::vector<float>{1.0f - 0.1f * 0.5f, 2.0f + 0.1f * 0.5f}));
}

TEST(ShardedUpdateTest, RejectsNonShardLocalAndBadShapes) {
  absl::StatusOr<DeviceMesh> mesh = DeviceMesh::Create(2, 2, 1, true);
  OptimizerSpec clip = Spec(OptimizerKind::kSgd);
  clip.clip_global_norm = 1.0f;
  const std::vector<std::vector<float>> w = {{1.0f}};
  const std::vector<std::vector<float>> g(4, std::vector<float>{1.0f});
  absl::StatusOr<ShardedUpdateResult> r = ShardedUpdate(*mesh, 1, w, g, clip);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_FALSE(ShardedUpdate(*mesh, 3, w, g, Spec(OptimizerKind::kSgd)).ok());
  const std::vector<std::vector<float>> g3(3, std::vector<float>{1.0f});
  EXPECT_FALSE(ShardedUpdate(*mesh, 1, w, g3, Spec(OptimizerKind::kSgd)).ok());
}

TEST(OptimizerCostTest, Fractions) {
  OptimizerCostScenario s{.params = 1e6,
                          .flops_per_param = 10,
                          .flops_rate = 1e9,
                          .other_step_seconds = 0.09};
  const OptimizerCostFraction one = ComputeOptimizerCostFraction(s, 1);
  EXPECT_DOUBLE_EQ(one.unsharded, 0.1);
  EXPECT_EQ(one.sharded, one.unsharded);
  const OptimizerCostFraction many = ComputeOptimizerCostFraction(s, 10);
  EXPECT_DOUBLE_EQ(many.sharded, 0.001 / (0.09 + 0.001));
  EXPECT_EQ(many.unsharded, one.unsharded);
}

TEST(PlaceTablesTest, LargeTablePartitions) {
  const std::vector<EmbeddingTable> tables = {{1000, 100}};
  absl::StatusOr<TablePlacement> p = PlaceTables(tables, 4, 50000);
  ASSERT_TRUE(p.ok()) << p.status();
  EXPECT_EQ(p->tables[0].decision, PlacementDecision::kPartition);
  EXPECT_EQ(p->PeakBytes(), 25000);
}

TEST(PlaceTablesTest, TinyTablesReplicate) {
  const std::vector<EmbeddingTable> tables = {{10, 4}, {3, 8}, {1, 1}};
  absl::StatusOr<TablePlacement> p = PlaceTables(tables, 8, 1 << 20);
  ASSERT_TRUE(p.ok());
  for (const TableAssignment& a : p->tables) {
    EXPECT_EQ(a.decision, PlacementDecision::kReplicate);
  }
  EXPECT_EQ(p->PeakBytes(), 40 + 24 + 1);
}

TEST(PlaceTablesTest, InfeasibleNamesTable) {
  const std::vector<EmbeddingTable> tables = {{10, 1}, {100, 100}};
  absl::StatusOr<TablePlacement> p = PlaceTables(tables, 2, 1000);
  ASSERT_FALSE(p.ok());
  EXPECT_NE(p.status().message().find("table 1"), absl::string_view::npos);
  EXPECT_FALSE(PlaceTables(tables, 0, 1000).ok());
  const std::vector<EmbeddingTable> empty_rows = {{0, 1}};
  EXPECT_FALSE(PlaceTables(empty_rows, 2, 1000).ok());
}

TEST(PlaceTablesTest, AgreesWithExhaustiveSearch) {
  std::mt19937_64 rng(31);
  int feasible = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    std::vector<EmbeddingTable> tables(n);
    for (EmbeddingTable& t : tables) {
      t.rows = 1 + static_cast<int64_t>(rng() % 50);
      t.row_bytes = 1 + static_cast<int64_t>(rng() % 20);
    }
    const int devices = 1 + static_cast<int>(rng() % 6);
    const int64_t capacity = 50 + static_cast<int64_t>(rng() % 1500);
    const int64_t threshold = static_cast<int64_t>(rng() % 400) - 1;
    const int64_t best =
        reference::ExhaustivePlacementPeak(tables, devices, capacity);
    absl::StatusOr<TablePlacement> p =
        PlaceTables(tables, devices, capacity, threshold);
    ASSERT_EQ(p.ok(), best >= 0) << "trial " << trial << ": " << p.status();
    if (!p.ok()) continue;
    ++feasible;
    EXPECT_LE(p->PeakBytes(), capacity);
    // Partitioned parts reassemble the table.
    for (const TableAssignment& a : p->tables) {
      const EmbeddingTable& t = tables[a.table];
      if (a.decision == PlacementDecision::kReplicate) continue;
      int64_t next = 0;
      for (int d = 0; d < devices; ++d) {
        EXPECT_EQ(a.row_begin[d], next);
        next = a.row_end[d];
      }
      EXPECT_EQ(next, t.rows);
    }
  }
  EXPECT_GT(feasible, 300);
}

TEST(PlaceTablesTest, CsvReport) {
  const std::vector<EmbeddingTable> tables = {{4, 10}, {100, 10}};
  absl::StatusOr<TablePlacement> p = PlaceTables(tables, 2, 1000, 40);
  ASSERT_TRUE(p.ok());
  const std::string csv = p->ToCsv(tables);
  EXPECT_NE(csv.find("table,decision,parts,rows,row_bytes,max_device_bytes\n"),
            std::string::npos);
  EXPECT_NE(csv.find("0,replicate,2,4,10,40\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("1,partition,2,100,10,500\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\ndevice,bytes_used,capacity\n0,540,1000\n1,540,1000\n"),
            std::string::npos)
      << csv;
}

}  // namespace
}  // namespace podscale

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

#include "podscale/partitioner.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "oracles.h"

namespace podscale {
namespace {

Tensor RandomMatrix(std::mt19937_64& rng, int64_t rows, int64_t cols) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(rows * cols);
  for (float& x : v) x = dist(rng);
  return Tensor({rows, cols}, std::move(v));
}

Tensor Filled(int64_t rows, int64_t cols, float value) {
  return Tensor({rows, cols}, std::vector<float>(rows * cols, value));
}

Tensor Identity(int64_t n) {
  Tensor t({n, n});
  for (int64_t i = 0; i < n; ++i) t.at(i, i) = 1.0f;
  return t;
}

TEST(SplitExtentsTest, RemainderGoesLast) {
  EXPECT_EQ(SplitExtents(10, 3), (std::vector<int64_t>{3, 3, 4}));
  EXPECT_EQ(SplitExtents(8, 4), (std::vector<int64_t>{2, 2, 2, 2}));
  EXPECT_EQ(SplitExtents(5, 1), (std::vector<int64_t>{5}));
}

TEST(Conv2DTest, IdentityKernelReturnsInput) {
  std::mt19937_64 rng(1);
  const Tensor image = RandomMatrix(rng, 7, 5);
  auto out = Conv2D(image, Filled(1, 1, 1.0f));
  ASSERT_TRUE(out.ok()) << out.status();
  EXPECT_EQ(*out, image);
}

TEST(Conv2DTest, OnesKernelOnConstantImage) {
  auto out = Conv2D(Filled(6, 6, 2.0f), Filled(3, 3, 1.0f));
  ASSERT_TRUE(out.ok());
  for (int64_t i = 1; i < 5; ++i) {
    for (int64_t j = 1; j < 5; ++j) EXPECT_EQ(out->at(i, j), 18.0f);
  }
  EXPECT_EQ(out->at(0, 0), 8.0f);
  EXPECT_EQ(out->at(0, 3), 12.0f);
}

TEST(Conv2DTest, RejectsEvenOrNonSquareKernel) {
  EXPECT_FALSE(Conv2D(Filled(4, 4, 1.0f), Filled(2, 2, 1.0f)).ok());
  EXPECT_FALSE(Conv2D(Filled(4, 4, 1.0f), Filled(3, 1, 1.0f)).ok());
}

TEST(Conv2DTest, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(2);
  for (int k : {1, 3, 5}) {
    const Tensor image = RandomMatrix(rng, 9, 11);
    const Tensor kernel = RandomMatrix(rng, k, k);
    auto out = Conv2D(image, kernel);
    ASSERT_TRUE(out.ok());
    EXPECT_EQ(*out, reference::NestedLoopConv2D(image, kernel)) << "k=" << k;
  }
}

TEST(SpatialConvTest, SinglePartHasNoHalo) {
  std::mt19937_64 rng(3);
  const Tensor image = RandomMatrix(rng, 8, 8);
  const Tensor kernel = RandomMatrix(rng, 3, 3);
  auto got = SpatialPartitionConv(image, kernel, 1, 0);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(got->report.elements_moved, 0);
  EXPECT_EQ(got->output, reference::NestedLoopConv2D(image, kernel));
}

TEST(SpatialConvTest, InteriorStripsExchangeTwoRows) {
  std::mt19937_64 rng(4);
  const Tensor image = RandomMatrix(rng, 300, 300);
  const Tensor kernel = RandomMatrix(rng, 3, 3);
  auto got = SpatialPartitionConv(image, kernel, 8, 0);
  ASSERT_TRUE(got.ok()) << got.status();
  ASSERT_EQ(got->report.per_device_moved.size(), 8u);
  EXPECT_EQ(got->report.per_device_moved.front(), 300);
  EXPECT_EQ(got->report.per_device_moved.back(), 300);
  for (int p = 1; p < 7; ++p) {
    EXPECT_EQ(got->report.per_device_moved[p], 2 * 300) << "part " << p;
  }
  EXPECT_EQ(got->report.elements_moved, 2 * 300 * 7);
  EXPECT_EQ(got->output, reference::NestedLoopConv2D(image, kernel));
}

TEST(SpatialConvTest, StripsAsThinAsTheHalo) {
  std::mt19937_64 rng(5);
  const Tensor image = RandomMatrix(rng, 4, 4);
  const Tensor kernel = RandomMatrix(rng, 3, 3);
  for (int dim : {0, 1}) {
    auto got = SpatialPartitionConv(image, kernel, 4, dim);
    ASSERT_TRUE(got.ok()) << got.status();
    EXPECT_EQ(got->output, reference::NestedLoopConv2D(image, kernel));
  }
}

TEST(SpatialConvTest, RejectsStripThinnerThanHalo) {
  const Tensor image = Filled(8, 8, 1.0f);
  EXPECT_FALSE(SpatialPartitionConv(image, Filled(5, 5, 1.0f), 8, 0).ok());
  EXPECT_FALSE(SpatialPartitionConv(image, Filled(3, 3, 1.0f), 9, 0).ok());
  EXPECT_FALSE(SpatialPartitionConv(image, Filled(3, 3, 1.0f), 0, 0).ok());
  EXPECT_FALSE(SpatialPartitionConv(image, Filled(3, 3, 1.0f), 2, 2).ok());
  EXPECT_FALSE(SpatialPartitionConv(image, Filled(2, 2, 1.0f), 2, 0).ok());
}

TEST(SpatialConvTest, RandomShapesMatchOracleAndHaloLaw) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 150; ++trial) {
    const int parts = std::vector<int>{1, 2, 4, 8}[trial % 4];
    const int k = std::vector<int>{1, 3, 5}[(trial / 4) % 3];
    const int dim = trial % 2;
    const int64_t hw = (k - 1) / 2;
    const int64_t extent =
        parts * std::max<int64_t>(1, hw) + static_cast<int64_t>(rng() % 9);
    const int64_t cross = 1 + static_cast<int64_t>(rng() % 12);
    const Tensor image = dim == 0 ? RandomMatrix(rng, extent, cross)
                                  : RandomMatrix(rng, cross, extent);
    const Tensor kernel = RandomMatrix(rng, k, k);
    auto got = SpatialPartitionConv(image, kernel, parts, dim);
    ASSERT_TRUE(got.ok()) << got.status();
    EXPECT_EQ(got->output, reference::NestedLoopConv2D(image, kernel))
        << "trial " << trial;
    EXPECT_EQ(got->report.elements_moved, 2 * hw * cross * (parts - 1));
  }
}

TEST(ShardedMatMulTest, SinglePartIsDense) {
  std::mt19937_64 rng(7);
  const Tensor a = RandomMatrix(rng, 4, 6);
  const Tensor w = RandomMatrix(rng, 6, 8);
  for (auto dim : {FeatureShardDim::kOutput, FeatureShardDim::kContraction}) {
    auto got = ShardedMatMulFeature(a, w, 1, dim);
    ASSERT_TRUE(got.ok());
    EXPECT_EQ(got->output, reference::DenseMatMul(a, w));
    EXPECT_EQ(got->report.elements_moved, 0);
  }
}

TEST(ShardedMatMulTest, IdentityWithTwoOutputParts) {
  std::mt19937_64 rng(8);
  const Tensor a = RandomMatrix(rng, 3, 4);
  auto got = ShardedMatMulFeature(a, Identity(4), 2, FeatureShardDim::kOutput);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(got->output, a);
}

TEST(ShardedMatMulTest, RandomSplitsOnBothDims) {
  std::mt19937_64 rng(9);
  const Tensor a = RandomMatrix(rng, 4, 6);
  const Tensor w = RandomMatrix(rng, 6, 8);
  for (int parts : {2, 3}) {
    auto f = ShardedMatMulFeature(a, w, parts, FeatureShardDim::kOutput);
    ASSERT_TRUE(f.ok());
    EXPECT_EQ(f->output, reference::DenseMatMul(a, w)) << parts;
    auto d = ShardedMatMulFeature(a, w, parts, FeatureShardDim::kContraction);
    ASSERT_TRUE(d.ok());
    EXPECT_EQ(d->output, reference::BlockedMatMul(a, w, parts)) << parts;
    EXPECT_FALSE(d->schedule.empty());
  }
}

TEST(ShardedMatMulTest, UnevenOutputSplitIsPadded) {
  std::mt19937_64 rng(10);
  const Tensor a = RandomMatrix(rng, 5, 3);
  const Tensor w = RandomMatrix(rng, 3, 7);
  auto got = ShardedMatMulFeature(a, w, 4, FeatureShardDim::kOutput);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(got->output, reference::DenseMatMul(a, w));
}

TEST(ShardedMatMulTest, Errors) {
  const Tensor a = Filled(2, 3, 1.0f);
  EXPECT_FALSE(
      ShardedMatMulFeature(a, Filled(4, 2, 1.0f), 1, FeatureShardDim::kOutput)
          .ok());
  EXPECT_FALSE(
      ShardedMatMulFeature(a, Filled(3, 2, 1.0f), 0, FeatureShardDim::kOutput)
          .ok());
  EXPECT_FALSE(ShardedMatMulFeature(a, Filled(3, 2, 1.0f), 4,
                                    FeatureShardDim::kContraction)
                   .ok());
}

TEST(ShardSpecTest, Validate) {
  const std::vector<int64_t> shape = {4, 6};
  EXPECT_TRUE(ShardSpec::Replicated().Validate(shape, 4).ok());
  EXPECT_TRUE(ShardSpec::Split(0, 2).Validate(shape, 4).ok());
  EXPECT_FALSE(ShardSpec::Split(2, 2).Validate(shape, 4).ok());
  EXPECT_FALSE(ShardSpec::Split(0, 3).Validate(shape, 4).ok());
  EXPECT_FALSE(ShardSpec::Split(0, 0).Validate(shape, 4).ok());
  EXPECT_FALSE(ShardSpec::Replicated().Validate(shape, 0).ok());
}

TEST(ReshardTest, SameSpecMovesNothing) {
  std::mt19937_64 rng(11);
  const Tensor t = RandomMatrix(rng, 4, 4);
  auto got = Reshard(t, ShardSpec::Split(0, 2), ShardSpec::Split(0, 2), 2);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(got->report.elements_moved, 0);
}

TEST(ReshardTest, RowsToColumns) {
  std::mt19937_64 rng(12);
  const Tensor t = RandomMatrix(rng, 4, 4);
  auto got = Reshard(t, ShardSpec::Split(0, 2), ShardSpec::Split(1, 2), 2);
  ASSERT_TRUE(got.ok()) << got.status();
  EXPECT_EQ(got->report.per_device_moved, (std::vector<int64_t>{4, 4}));
  auto want = ShardTensor(t, ShardSpec::Split(1, 2), 2);
  ASSERT_TRUE(want.ok());
  EXPECT_EQ(got->per_device, *want);
}

TEST(ReshardTest, SplitToReplicatedMovesThreeQuarters) {
  std::mt19937_64 rng(13);
  const Tensor t = RandomMatrix(rng, 8, 4);
  auto got = Reshard(t, ShardSpec::Split(0, 4), ShardSpec::Replicated(), 4);
  ASSERT_TRUE(got.ok());
  for (int64_t moved : got->report.per_device_moved) EXPECT_EQ(moved, 24);
  for (const Tensor& piece : got->per_device) EXPECT_EQ(piece, t);
}

TEST(ReshardTest, RandomSpecsMatchIntervalOracle) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 300; ++trial) {
    const int devices = 1 << (rng() % 4);
    const int rank = 1 + static_cast<int>(rng() % 3);
    std::vector<int64_t> shape(rank);
    for (int64_t& s : shape) s = devices + static_cast<int64_t>(rng() % 6);
    std::vector<float> values(ShapeElementCount(shape));
    for (size_t i = 0; i < values.size(); ++i) values[i] = float(i);
    const Tensor t(shape, values);
    auto random_spec = [&] {
      if (rng() % 3 == 0) return ShardSpec::Replicated();
      int parts = 1 << (rng() % 4);
      while (devices % parts != 0) parts /= 2;
      return ShardSpec::Split(static_cast<int>(rng() % rank), parts);
    };
    const ShardSpec from = random_spec();
    const ShardSpec to = random_spec();
    auto got = Reshard(t, from, to, devices);
    ASSERT_TRUE(got.ok()) << got.status();
    auto want = ShardTensor(t, to, devices);
    ASSERT_TRUE(want.ok());
    EXPECT_EQ(got->per_device, *want);
    for (int g = 0; g < devices; ++g) {
      EXPECT_EQ(got->report.per_device_moved[g],
                reference::ReshardTraffic(shape, from, to, devices, g));
    }
    auto back = AssembleTensor(got->per_device, shape, to, devices);
    ASSERT_TRUE(back.ok());
    EXPECT_EQ(*back, t);
  }
}

TEST(GatherTest, IdentityPermutationAndDuplicates) {
  std::mt19937_64 rng(15);
  const Tensor table = RandomMatrix(rng, 5, 3);
  const std::vector<int64_t> identity = {0, 1, 2, 3, 4};
  auto same = GatherAsOneHotMatMul(table, identity);
  ASSERT_TRUE(same.ok());
  EXPECT_EQ(*same, table);
  const std::vector<int64_t> dup = {2, 2, 0, 4, 2};
  auto got = GatherAsOneHotMatMul(table, dup);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(*got, reference::DirectGather(table, dup));
}

TEST(GatherTest, OutOfRangeIndex) {
  const Tensor table = Filled(3, 2, 1.0f);
  const std::vector<int64_t> bad = {0, 3};
  EXPECT_EQ(GatherAsOneHotMatMul(table, bad).status().code(),
            absl::StatusCode::kOutOfRange);
  const std::vector<int64_t> negative = {-1};
  EXPECT_FALSE(GatherAsOneHotMatMul(table, negative).ok());
}

TEST(ScalarReassociateTest, UnitScalarIsExact) {
  std::mt19937_64 rng(16);
  const Tensor a = RandomMatrix(rng, 3, 4);
  const Tensor b = RandomMatrix(rng, 4, 5);
  auto got = ScalarReassociate(1.0f, a, b);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(got->output, reference::DenseMatMul(a, b));
}

TEST(ScalarReassociateTest, ScalesTheSmallerOperand) {
  std::mt19937_64 rng(17);
  const Tensor a = RandomMatrix(rng, 2, 3);
  const Tensor b = RandomMatrix(rng, 3, 4);
  auto got = ScalarReassociate(0.5f, a, b);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(got->applied_to, ScalarSide::kLeft);
  EXPECT_EQ(got->scalar_multiplies, 6);
  auto right = ScalarReassociate(0.5f, b.rows() == 3 ? Filled(5, 3, 1.0f) : a,
                                 Filled(3, 2, 1.0f));
  ASSERT_TRUE(right.ok());
  EXPECT_EQ(right->applied_to, ScalarSide::kRight);
  EXPECT_EQ(right->scalar_multiplies, 6);
  auto hinted = ScalarReassociate(0.5f, a, b, ScalarSide::kRight);
  ASSERT_TRUE(hinted.ok());
  EXPECT_EQ(hinted->applied_to, ScalarSide::kRight);
  EXPECT_EQ(hinted->scalar_multiplies, 12);
}

TEST(ScalarReassociateTest, CloseToDoubleProduct) {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t m = 1 + rng() % 6, k = 1 + rng() % 8, n = 1 + rng() % 6;
    const Tensor a = RandomMatrix(rng, m, k);
    const Tensor b = RandomMatrix(rng, k, n);
    const float s = 0.25f + float(rng() % 100) / 10.0f;
    auto got = ScalarReassociate(s, a, b);
    ASSERT_TRUE(got.ok());
    const std::vector<double> want = reference::ScaledProduct(s, a, b);
    for (int64_t i = 0; i < m * n; ++i) {
      EXPECT_NEAR(got->output.values()[i], want[i], 1e-6 * s * double(k) * 4.0);
    }
    EXPECT_LE(got->scalar_multiplies, std::min(m * k, k * n));
  }
}

TEST(ScalarReassociateTest, RejectsNonFiniteScalar) {
  const Tensor a = Filled(2, 2, 1.0f);
  EXPECT_FALSE(ScalarReassociate(std::nanf(""), a, a).ok());
  EXPECT_FALSE(ScalarReassociate(INFINITY, a, a).ok());
}

void ExpectBatchNormNear(const std::vector<Tensor>& got,
                         const std::vector<Tensor>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (size_t d = 0; d < got.size(); ++d) {
    ASSERT_EQ(got[d].shape(), want[d].shape());
    for (int64_t i = 0; i < got[d].num_elements(); ++i) {
      const float b = want[d].values()[i];
      EXPECT_NEAR(got[d].values()[i], b, 1e-5 * std::max(1.0f, std::abs(b)));
    }
  }
}

TEST(BatchNormTest, SingleDeviceIsLocalBatchNorm) {
  std::mt19937_64 rng(19);
  const std::vector<Tensor> shards = {RandomMatrix(rng, 16, 5)};
  auto got = DistributedBatchNorm(shards);
  ASSERT_TRUE(got.ok());
  ExpectBatchNormNear(*got, reference::ConcatBatchNorm(shards, 1e-5f));
}

TEST(BatchNormTest, ConstantInputsNormalizeToZero) {
  const std::vector<Tensor> shards = {Filled(3, 2, 7.5f), Filled(5, 2, 7.5f)};
  auto got = DistributedBatchNorm(shards);
  ASSERT_TRUE(got.ok());
  for (const Tensor& t : *got) {
    for (float v : t.values()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(BatchNormTest, UnevenShardsMatchConcatenated) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 100; ++trial) {
    const int devices = 1 + rng() % 8;
    const int64_t features = 1 + rng() % 6;
    std::vector<Tensor> shards;
    for (int d = 0; d < devices; ++d) {
      Tensor t = RandomMatrix(rng, rng() % 5, features);
      for (float& v : t.values()) v = v * 3.0f + 100.0f;
      shards.push_back(std::move(t));
    }
    shards[0] = RandomMatrix(rng, 2, features);
    auto got = DistributedBatchNorm(shards);
    ASSERT_TRUE(got.ok()) << got.status();
    ExpectBatchNormNear(*got, reference::ConcatBatchNorm(shards, 1e-5f));
  }
}

TEST(BatchNormTest, Errors) {
  EXPECT_FALSE(DistributedBatchNorm({}).ok());
  const std::vector<Tensor> empty = {Tensor({0, 3}), Tensor({0, 3})};
  EXPECT_FALSE(DistributedBatchNorm(empty).ok());
  const std::vector<Tensor> mismatched = {Filled(2, 3, 1.0f),
                                          Filled(2, 4, 1.0f)};
  EXPECT_FALSE(DistributedBatchNorm(mismatched).ok());
}

TEST(TopKTest, SingleDeviceAndMax) {
  const std::vector<std::vector<float>> one = {{3, 9, 1, 9, 4}};
  auto got = DistributedTopK(one, 3);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(*got, (std::vector<TopKEntry>{{9, 0, 1}, {9, 0, 3}, {4, 0, 4}}));
  const std::vector<std::vector<float>> many = {{1, 2}, {8}, {}, {5, 8}};
  auto max = DistributedTopK(many, 1);
  ASSERT_TRUE(max.ok());
  EXPECT_EQ(*max, (std::vector<TopKEntry>{{8, 1, 0}}));
}

TEST(TopKTest, DuplicatesAcrossDevices) {
  const std::vector<std::vector<float>> shards = {
      {5, 1, 5}, {5, 2}, {0, 5}, {3, 5, 5}};
  auto got = DistributedTopK(shards, 5);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(*got, reference::FullSortTopK(shards, 5));
  EXPECT_EQ(*got, (std::vector<TopKEntry>{
                      {5, 0, 0}, {5, 0, 2}, {5, 1, 0}, {5, 2, 1}, {5, 3, 1}}));
}

TEST(TopKTest, RandomMatchesFullSort) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<float>> shards(1 + rng() % 6);
    int64_t total = 0;
    for (auto& s : shards) {
      s.resize(rng() % 7);
      for (float& v : s) v = float(int(rng() % 9) - 4);
      total += s.size();
    }
    if (total == 0) continue;
    const int64_t k = 1 + rng() % total;
    auto got = DistributedTopK(shards, k);
    ASSERT_TRUE(got.ok());
    EXPECT_EQ(*got, reference::FullSortTopK(shards, k));
  }
}

TEST(TopKTest, Errors) {
  const std::vector<std::vector<float>> shards = {{1, 2}, {3}};
  EXPECT_FALSE(DistributedTopK(shards, 4).ok());
  EXPECT_FALSE(DistributedTopK(shards, -1).ok());
  auto none = DistributedTopK(shards, 0);
  ASSERT_TRUE(none.ok());
  EXPECT_TRUE(none->empty());
  const std::vector<std::vector<float>> nan = {{1, std::nanf("")}};
  EXPECT_FALSE(DistributedTopK(nan, 1).ok());
}

TEST(PartitionReportTest, Csv) {
  PartitionReport r;
  r.op = "spatial_conv";
  r.parts = 4;
  r.elements_moved = 12;
  r.scalar_flops = 100;
  r.imbalance_ratio = 1.25;
  const std::vector<PartitionReport> rows = {r};
  const std::string csv = PartitionReportCsv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "op,parts,elements_moved,scalar_flops,imbalance_ratio");
  EXPECT_NE(csv.find("spatial_conv,4,12,100,"), std::string::npos);
}

}  // namespace
}  // namespace podscale

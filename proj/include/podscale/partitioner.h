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

// SPMD model-parallel kernels: spatially partitioned convolution with halo
// exchange, feature- and contraction-sharded matmul, resharding, gather as a
// one-hot matmul, scalar reassociation, distributed batch norm and
// distributed top-k.
//
// Each kernel runs the per-device pieces explicitly and reassembles the
// result, so every partitioned path can be compared against its dense
// counterpart. Uneven splits give the remainder to the last part.

#ifndef PODSCALE_PARTITIONER_H_
#define PODSCALE_PARTITIONER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "podscale/collectives.h"
#include "podscale/tensor.h"
#include "podscale/topology.h"

namespace podscale {

// Row of the traffic/flop report.
struct PartitionReport {
  std::string op;
  int parts = 1;
  int64_t elements_moved = 0;
  int64_t scalar_flops = 0;
  // Largest per-device work over the mean; 1.0 when balanced.
  double imbalance_ratio = 1.0;
  std::vector<int64_t> per_device_moved;
};

// Header: op,parts,elements_moved,scalar_flops,imbalance_ratio
std::string PartitionReportCsv(std::span<const PartitionReport> rows);

// Extents of `parts` contiguous pieces of `extent`: extent / parts each, the
// last one also taking the remainder.
std::vector<int64_t> SplitExtents(int64_t extent, int parts);

// Dense reference kernels (OpenMP over output rows).
absl::StatusOr<Tensor> Conv2D(const Tensor& image, const Tensor& kernel);
absl::StatusOr<Tensor> MatMul(const Tensor& a, const Tensor& b);

struct HaloSpec {
  int kernel_extent = 1;
  int halo_width() const { return (kernel_extent - 1) / 2; }
};

struct PartitionedConv {
  Tensor output;
  PartitionReport report;
};

// Splits the image into strips along split_dim (0 = H, 1 = W), exchanges halo
// rows/columns of width (k - 1) / 2 with strip neighbours, convolves each
// strip locally and reassembles.
absl::StatusOr<PartitionedConv> SpatialPartitionConv(const Tensor& image,
                                                     const Tensor& kernel,
                                                     int parts, int split_dim);

enum class FeatureShardDim { kOutput, kContraction };

struct ShardedMatMul {
  Tensor output;
  CollectiveSchedule schedule;
  PartitionReport report;
};

// A (b x d) times W (d x f) on a tile of `parts` devices anchored at the
// origin. kOutput splits the columns of W (zero-padded to a multiple of
// parts) and all-gathers the column blocks. kContraction splits d, remainder
// to the last part, and sums the partial products with a model-parallel
// all-reduce: each element is the ascending-part sum of ascending-k dots.
absl::StatusOr<ShardedMatMul> ShardedMatMulFeature(const Tensor& a,
                                                   const Tensor& w, int parts,
                                                   FeatureShardDim shard_dim);

// Replicated, or split along one dimension into `parts`. On G devices, device
// g holds part g / (G / parts).
struct ShardSpec {
  std::optional<int> split_dim;
  int parts = 1;

  static ShardSpec Replicated() { return {}; }
  static ShardSpec Split(int dim, int parts) { return {dim, parts}; }
  absl::Status Validate(std::span<const int64_t> shape, int devices) const;
  friend bool operator==(const ShardSpec&, const ShardSpec&) = default;
};

struct ReshardResult {
  std::vector<Tensor> per_device;
  PartitionReport report;
};

// Per-device pieces of `tensor` under `spec`.
absl::StatusOr<std::vector<Tensor>> ShardTensor(const Tensor& tensor,
                                                const ShardSpec& spec,
                                                int devices);
// Inverse of ShardTensor.
absl::StatusOr<Tensor> AssembleTensor(std::span<const Tensor> pieces,
                                      std::span<const int64_t> shape,
                                      const ShardSpec& spec, int devices);

// Moves a tensor from one sharding to another. A device receives exactly the
// elements it owns under `to` but not under `from`.
absl::StatusOr<ReshardResult> Reshard(const Tensor& tensor,
                                      const ShardSpec& from,
                                      const ShardSpec& to, int devices);

// Gathers rows of `table` by multiplying a one-hot (m x n) matrix with it.
absl::StatusOr<Tensor> GatherAsOneHotMatMul(const Tensor& table,
                                            std::span<const int64_t> indices);

enum class ScalarSide { kAuto, kLeft, kRight };

struct ScalarReassociation {
  Tensor output;
  ScalarSide applied_to = ScalarSide::kLeft;
  int64_t scalar_multiplies = 0;
};

// Computes s * (A B) by scaling whichever operand has fewer elements (ties
// scale A) unless the hint picks a side.
absl::StatusOr<ScalarReassociation> ScalarReassociate(
    float s, const Tensor& a, const Tensor& b,
    ScalarSide hint = ScalarSide::kAuto);

// Normalizes each device's (batch x features) slice with the mean and
// population variance of the whole group. One all-reduce of the per-feature
// sums gives a rough mean; a second one of the deviations from it and their
// squares gives the mean and variance.
absl::StatusOr<std::vector<Tensor>> DistributedBatchNorm(
    std::span<const Tensor> shards, float epsilon = 1e-5f);

struct TopKEntry {
  float value = 0.0f;
  int owner = 0;
  int64_t local_index = 0;
  friend bool operator==(const TopKEntry&, const TopKEntry&) = default;
};

// Global top-k by value, ties broken by (owner, local_index) ascending.
absl::StatusOr<std::vector<TopKEntry>> DistributedTopK(
    std::span<const std::vector<float>> shards, int64_t k);

}  // namespace podscale

#endif  // PODSCALE_PARTITIONER_H_

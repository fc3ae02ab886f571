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

// Weight-update sharding: the optimizer runs once per gradient shard between
// the reduce-scatter and all-gather halves of the hierarchical all-reduce,
// instead of once per replica on the full vector. Also embedding-table
// placement.

#ifndef PODSCALE_SHARDING_H_
#define PODSCALE_SHARDING_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "podscale/collectives.h"
#include "podscale/topology.h"

namespace podscale {

enum class OptimizerKind { kSgd, kMomentum, kLambLike };

absl::string_view OptimizerKindName(OptimizerKind kind);
absl::StatusOr<OptimizerKind> ParseOptimizerKind(absl::string_view name);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kSgd;
  float learning_rate = 0.01f;
  // Momentum coefficient (kMomentum).
  float momentum = 0.9f;
  // Moment decay, epsilon and decoupled weight decay (kLambLike).
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-6f;
  float weight_decay = 0.0f;
  // Clip the summed gradient to this global L2 norm; 0 disables. Needs the
  // whole gradient, so it is not shard-local.
  float clip_global_norm = 0.0f;

  bool IsShardLocal() const { return clip_global_norm <= 0.0f; }
  friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

// Split of a flat weight vector into trust-ratio rows. kLambLike normalizes
// per row; shards never split a row. Elementwise optimizers ignore it.
struct ParamLayout {
  std::vector<int64_t> row_lengths;

  static ParamLayout Elementwise(int64_t n);
  static ParamLayout UniformRows(int64_t n, int64_t row_length);
  int64_t num_elements() const;
  absl::Status Validate() const;
};

// Optimizer slots. Sized to the full vector for replicated updates and to
// one shard for sharded ones.
struct OptimizerState {
  std::vector<float> m;
  std::vector<float> v;
};

// Applies one optimizer step to whole rows. weights is updated in place.
void ApplyOptimizer(const OptimizerSpec& spec, std::span<float> weights,
                    std::span<const float> grads,
                    std::span<const int64_t> row_lengths, std::span<float> m,
                    std::span<float> v);

// Reference path: every replica sums the gradients and runs the optimizer on
// the full vector. Replicas are listed column by column; each consecutive
// block of `replicas_per_column` is folded first, then the block sums are
// folded, which is the order the hierarchical all-reduce uses.
absl::StatusOr<std::vector<float>> ReplicatedUpdate(
    std::span<const float> weights,
    std::span<const std::vector<float>> grads_per_replica,
    int replicas_per_column, const OptimizerSpec& spec,
    const ParamLayout& layout, OptimizerState* state);

// Where each shard of one weight partition lives in the packed payload that
// the hierarchical all-reduce carries. Shard k holds the rows starting in
// [k N / S, (k + 1) N / S) and sits at slots [k L, k L + count_k).
struct WeightUpdateShardingPlan {
  int64_t num_elements = 0;
  int64_t num_shards = 0;
  int64_t slot_length = 0;
  std::vector<int64_t> shard_begin;  // num_shards + 1 row-aligned boundaries
  std::vector<int64_t> row_lengths;

  int64_t shard_size(int64_t k) const {
    return shard_begin[k + 1] - shard_begin[k];
  }
  int64_t packed_length() const { return num_shards * slot_length; }
  std::vector<float> Pack(std::span<const float> flat) const;
  std::vector<float> Unpack(std::span<const float> packed) const;
  // Rows of shard k, in order.
  std::vector<int64_t> ShardRows(int64_t k) const;
};

absl::StatusOr<WeightUpdateShardingPlan> PlanWeightUpdateSharding(
    const ParamLayout& layout, int64_t num_shards);

struct ShardedUpdateResult {
  // New weights per device, indexed by DeviceMesh::DeviceId.
  std::vector<std::vector<float>> weights;
  CollectiveSchedule schedule;
};

// Stateful sharded optimizer. With model-parallel stride s there are s
// independent weight partitions (peer ids), each updated by its own
// data-parallel group of devices; the groups run concurrently.
class ShardedOptimizer {
 public:
  static absl::StatusOr<ShardedOptimizer> Create(
      const DeviceMesh& mesh, int stride, const OptimizerSpec& spec,
      std::vector<ParamLayout> layouts);

  // weights_per_peer[o] is the current partition o; grads are per device.
  absl::StatusOr<ShardedUpdateResult> Step(
      std::span<const std::vector<float>> weights_per_peer,
      std::span<const std::vector<float>> grads_per_device);

  const WeightUpdateShardingPlan& plan(int peer) const { return plans_[peer]; }
  int num_shards() const { return num_shards_; }

 private:
  ShardedOptimizer(DeviceMesh mesh, int stride, OptimizerSpec spec,
                   std::vector<WeightUpdateShardingPlan> plans);

  DeviceMesh mesh_;
  int stride_;
  int num_shards_;
  OptimizerSpec spec_;
  std::vector<WeightUpdateShardingPlan> plans_;
  // state_[peer][shard], held by the shard's owner.
  std::vector<std::vector<OptimizerState>> state_;
};

// One sharded step from zero optimizer state.
absl::StatusOr<ShardedUpdateResult> ShardedUpdate(
    const DeviceMesh& mesh, int stride,
    std::span<const std::vector<float>> weights_per_peer,
    std::span<const std::vector<float>> grads_per_device,
    const OptimizerSpec& spec, std::vector<ParamLayout> layouts = {});

struct OptimizerCostScenario {
  double params = 0.0;
  double flops_per_param = 0.0;
  double flops_rate = 1.0;
  // Step time excluding the optimizer (compute + all-reduce).
  double other_step_seconds = 0.0;
};

struct OptimizerCostFraction {
  double unsharded = 0.0;
  double sharded = 0.0;
  int64_t shards = 1;
};

// Share of the step spent in the optimizer, with and without sharding across
// `shards` owners.
OptimizerCostFraction ComputeOptimizerCostFraction(
    const OptimizerCostScenario& scenario, int64_t shards);

struct EmbeddingTable {
  int64_t rows = 0;
  int64_t row_bytes = 0;
  int64_t bytes() const { return rows * row_bytes; }
  friend bool operator==(const EmbeddingTable&,
                         const EmbeddingTable&) = default;
};

enum class PlacementDecision { kReplicate, kPartition };

struct TableAssignment {
  int table = 0;
  PlacementDecision decision = PlacementDecision::kReplicate;
  int parts = 1;
  // Row range [row_begin[d], row_end[d]) held by device d. Replicated tables
  // cover all rows on every device.
  std::vector<int64_t> row_begin;
  std::vector<int64_t> row_end;
};

struct TablePlacement {
  std::vector<TableAssignment> tables;  // indexed by table id
  std::vector<int64_t> device_bytes;
  int64_t capacity = 0;

  int64_t PeakBytes() const;
  // Header: table,decision,parts,rows,row_bytes,max_device_bytes, followed
  // by a blank line and a device,bytes_used,capacity section.
  std::string ToCsv(std::span<const EmbeddingTable> inputs) const;
};

// Replicates tables of at most `threshold` bytes (capacity / 16 when
// negative) and partitions the rest row-wise over the least loaded devices.
// Tables go in descending size, ties by index. If that greedy plan overflows
// a device, falls back to partitioning everything.
absl::StatusOr<TablePlacement> PlaceTables(
    std::span<const EmbeddingTable> tables, int devices, int64_t capacity,
    int64_t threshold = -1);

}  // namespace podscale

#endif  // PODSCALE_SHARDING_H_

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "podscale/status_macros.h"

namespace podscale {

absl::string_view OptimizerKindName(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd:
      return "sgd";
    case OptimizerKind::kMomentum:
      return "momentum";
    case OptimizerKind::kLambLike:
      return "lamb_like";
  }
  return "unknown";
}

absl::StatusOr<OptimizerKind> ParseOptimizerKind(absl::string_view name) {
  for (OptimizerKind k : {OptimizerKind::kSgd, OptimizerKind::kMomentum,
                          OptimizerKind::kLambLike}) {
    if (name == OptimizerKindName(k)) return k;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown optimizer kind '", name, "' (expected sgd|momentum|lamb_like)"));
}

ParamLayout ParamLayout::Elementwise(int64_t n) {
  return ParamLayout{std::vector<int64_t>(n, 1)};
}

ParamLayout ParamLayout::UniformRows(int64_t n, int64_t row_length) {
  ParamLayout layout;
  for (int64_t done = 0; done < n; done += row_length) {
    layout.row_lengths.push_back(std::min(row_length, n - done));
  }
  return layout;
}

int64_t ParamLayout::num_elements() const {
  return std::accumulate(row_lengths.begin(), row_lengths.end(), int64_t{0});
}

absl::Status ParamLayout::Validate() const {
  if (row_lengths.empty()) {
    return absl::InvalidArgumentError("parameter layout has no rows");
  }
  for (int64_t len : row_lengths) {
    if (len < 1) {
      return absl::InvalidArgumentError("parameter rows must be non-empty");
    }
  }
  return absl::OkStatus();
}

void ApplyOptimizer(const OptimizerSpec& spec, std::span<float> weights,
                    std::span<const float> grads,
                    std::span<const int64_t> row_lengths, std::span<float> m,
                    std::span<float> v) {
  const int64_t n = static_cast<int64_t>(weights.size());
  switch (spec.kind) {
    case OptimizerKind::kSgd:
      for (int64_t i = 0; i < n; ++i) {
        weights[i] = weights[i] - spec.learning_rate * grads[i];
      }
      return;
    case OptimizerKind::kMomentum:
      for (int64_t i = 0; i < n; ++i) {
        m[i] = spec.momentum * m[i] + grads[i];
        weights[i] = weights[i] - spec.learning_rate * m[i];
      }
      return;
    case OptimizerKind::kLambLike: {
      std::vector<float> update;
      int64_t begin = 0;
      for (int64_t len : row_lengths) {
        update.resize(len);
        double w_sq = 0.0;
        double u_sq = 0.0;
        for (int64_t j = 0; j < len; ++j) {
          const int64_t i = begin + j;
          const float g = grads[i];
          m[i] = spec.beta1 * m[i] + (1.0f - spec.beta1) * g;
          v[i] = spec.beta2 * v[i] + (1.0f - spec.beta2) * g * g;
          update[j] = m[i] / (std::sqrt(v[i]) + spec.epsilon) +
                      spec.weight_decay * weights[i];
          w_sq += static_cast<double>(weights[i]) * weights[i];
          u_sq += static_cast<double>(update[j]) * update[j];
        }
        const float trust = (w_sq > 0.0 && u_sq > 0.0)
                                ? static_cast<float>(std::sqrt(w_sq / u_sq))
                                : 1.0f;
        for (int64_t j = 0; j < len; ++j) {
          const int64_t i = begin + j;
          weights[i] = weights[i] - spec.learning_rate * trust * update[j];
        }
        begin += len;
      }
      return;
    }
  }
}

absl::StatusOr<std::vector<float>> ReplicatedUpdate(
    std::span<const float> weights,
    std::span<const std::vector<float>> grads_per_replica,
    int replicas_per_column, const OptimizerSpec& spec,
    const ParamLayout& layout, OptimizerState* state) {
  const int64_t n = static_cast<int64_t>(weights.size());
  const int64_t replicas = static_cast<int64_t>(grads_per_replica.size());
  if (replicas == 0) {
    return absl::InvalidArgumentError("no replicas");
  }
  if (replicas_per_column < 1 || replicas % replicas_per_column != 0) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%d replicas do not split into columns of %d", replicas,
                        replicas_per_column));
  }
  for (int64_t r = 0; r < replicas; ++r) {
    if (static_cast<int64_t>(grads_per_replica[r].size()) != n) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "replica %d gradient has %d elements, weights have %d", r,
          grads_per_replica[r].size(), n));
    }
  }
  ParamLayout rows =
      layout.row_lengths.empty() ? ParamLayout::Elementwise(n) : layout;
  PODSCALE_RETURN_IF_ERROR(rows.Validate());
  if (rows.num_elements() != n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "layout covers %d elements, weights have %d", rows.num_elements(), n));
  }

  std::vector<float> sum(n, 0.0f);
  std::vector<float> column(n);
  for (int64_t c = 0; c < replicas / replicas_per_column; ++c) {
    const int64_t first = c * replicas_per_column;
    for (int64_t i = 0; i < n; ++i) {
      float acc = grads_per_replica[first][i];
      for (int64_t r = 1; r < replicas_per_column; ++r) {
        acc = acc + grads_per_replica[first + r][i];
      }
      column[i] = acc;
    }
    if (c == 0) {
      sum = column;
    } else {
      for (int64_t i = 0; i < n; ++i) sum[i] = sum[i] + column[i];
    }
  }
  if (spec.clip_global_norm > 0.0f) {
    double sq = 0.0;
    for (float g : sum) sq += static_cast<double>(g) * g;
    const double norm = std::sqrt(sq);
    if (norm > spec.clip_global_norm) {
      const float scale = static_cast<float>(spec.clip_global_norm / norm);
      for (float& g : sum) g *= scale;
    }
  }

  OptimizerState local;
  OptimizerState& slots = state != nullptr ? *state : local;
  slots.m.resize(n, 0.0f);
  slots.v.resize(n, 0.0f);
  std::vector<float> out(weights.begin(), weights.end());
  ApplyOptimizer(spec, out, sum, rows.row_lengths, slots.m, slots.v);
  return out;
}

std::vector<float> WeightUpdateShardingPlan::Pack(
    std::span<const float> flat) const {
  std::vector<float> packed(packed_length(), 0.0f);
  for (int64_t k = 0; k < num_shards; ++k) {
    std::copy_n(flat.begin() + shard_begin[k], shard_size(k),
                packed.begin() + k * slot_length);
  }
  return packed;
}

std::vector<float> WeightUpdateShardingPlan::Unpack(
    std::span<const float> packed) const {
  std::vector<float> flat(num_elements);
  for (int64_t k = 0; k < num_shards; ++k) {
    std::copy_n(packed.begin() + k * slot_length, shard_size(k),
                flat.begin() + shard_begin[k]);
  }
  return flat;
}

std::vector<int64_t> WeightUpdateShardingPlan::ShardRows(int64_t k) const {
  std::vector<int64_t> rows;
  int64_t start = 0;
  for (int64_t len : row_lengths) {
    if (start >= shard_begin[k] && start < shard_begin[k + 1]) {
      rows.push_back(len);
    }
    start += len;
  }
  return rows;
}

absl::StatusOr<WeightUpdateShardingPlan> PlanWeightUpdateSharding(
    const ParamLayout& layout, int64_t num_shards) {
  PODSCALE_RETURN_IF_ERROR(layout.Validate());
  if (num_shards < 1) {
    return absl::InvalidArgumentError("shard count must be positive");
  }
  WeightUpdateShardingPlan plan;
  plan.num_elements = layout.num_elements();
  plan.num_shards = num_shards;
  plan.row_lengths = layout.row_lengths;
  plan.shard_begin.assign(num_shards + 1, plan.num_elements);
  // Row starts are increasing, so owners are non-decreasing; each boundary is
  // the first row start owned by that shard or a later one.
  int64_t next_shard = 0;
  int64_t start = 0;
  for (int64_t len : layout.row_lengths) {
    const int64_t owner = start * num_shards / plan.num_elements;
    for (; next_shard <= owner; ++next_shard) {
      plan.shard_begin[next_shard] = start;
    }
    start += len;
  }
  for (int64_t k = 0; k < num_shards; ++k) {
    plan.slot_length = std::max(plan.slot_length, plan.shard_size(k));
  }
  return plan;
}

ShardedOptimizer::ShardedOptimizer(DeviceMesh mesh, int stride,
                                   OptimizerSpec spec,
                                   std::vector<WeightUpdateShardingPlan> plans)
    : mesh_(std::move(mesh)),
      stride_(stride),
      num_shards_(static_cast<int>(plans.front().num_shards)),
      spec_(spec),
      plans_(std::move(plans)) {
  state_.resize(plans_.size());
  for (size_t o = 0; o < plans_.size(); ++o) {
    state_[o].resize(num_shards_);
    for (int k = 0; k < num_shards_; ++k) {
      state_[o][k].m.assign(plans_[o].shard_size(k), 0.0f);
      state_[o][k].v.assign(plans_[o].shard_size(k), 0.0f);
    }
  }
}

absl::StatusOr<ShardedOptimizer> ShardedOptimizer::Create(
    const DeviceMesh& mesh, int stride, const OptimizerSpec& spec,
    std::vector<ParamLayout> layouts) {
  if (!spec.IsShardLocal()) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "optimizer %s with clip_global_norm=%g needs the full gradient and "
        "cannot run on shards",
        OptimizerKindName(spec.kind), spec.clip_global_norm));
  }
  if (stride < 1 || mesh.x_size() % stride != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "stride %d does not divide x_size %d", stride, mesh.x_size()));
  }
  if (static_cast<int>(layouts.size()) != stride) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "need one parameter layout per model-parallel peer (%d), got %d",
        stride, layouts.size()));
  }
  const int64_t shards =
      static_cast<int64_t>(mesh.y_size()) * (mesh.x_size() / stride);
  std::vector<WeightUpdateShardingPlan> plans;
  for (const ParamLayout& layout : layouts) {
    PODSCALE_ASSIGN_OR_RETURN(WeightUpdateShardingPlan plan,
                              PlanWeightUpdateSharding(layout, shards));
    plans.push_back(std::move(plan));
  }
  return ShardedOptimizer(mesh, stride, spec, std::move(plans));
}

absl::StatusOr<ShardedUpdateResult> ShardedOptimizer::Step(
    std::span<const std::vector<float>> weights_per_peer,
    std::span<const std::vector<float>> grads_per_device) {
  if (static_cast<int>(weights_per_peer.size()) != stride_) {
    return absl::InvalidArgumentError(
        absl::StrFormat("expected %d weight partitions, got %d", stride_,
                        weights_per_peer.size()));
  }
  if (static_cast<int64_t>(grads_per_device.size()) != mesh_.num_devices()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("expected %d gradients, got %d", mesh_.num_devices(),
                        grads_per_device.size()));
  }
  for (int o = 0; o < stride_; ++o) {
    if (static_cast<int64_t>(weights_per_peer[o].size()) !=
        plans_[o].num_elements) {
      return absl::InvalidArgumentError(
          absl::StrFormat("partition %d has %d weights, layout expects %d", o,
                          weights_per_peer[o].size(), plans_[o].num_elements));
    }
  }

  std::vector<Payload> packed(mesh_.num_devices());
  for (int64_t id = 0; id < mesh_.num_devices(); ++id) {
    const int peer = mesh_.CoordOf(id).x % stride_;
    if (static_cast<int64_t>(grads_per_device[id].size()) !=
        plans_[peer].num_elements) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "device %s gradient has %d elements, partition %d has %d",
          mesh_.CoordOf(id).ToString(), grads_per_device[id].size(), peer,
          plans_[peer].num_elements));
    }
    packed[id].values = plans_[peer].Pack(grads_per_device[id]);
  }

  HierarchicalOptions options;
  options.update = [&](const ShardContext& ctx, std::span<float> shard) {
    const WeightUpdateShardingPlan& plan = plans_[ctx.peer];
    const int64_t k = ctx.offset / plan.slot_length;
    const int64_t count = plan.shard_size(k);
    const std::vector<float>& weights = weights_per_peer[ctx.peer];
    std::vector<float> updated(weights.begin() + plan.shard_begin[k],
                               weights.begin() + plan.shard_begin[k] + count);
    const std::vector<int64_t> rows = plan.ShardRows(k);
    OptimizerState& slots = state_[ctx.peer][k];
    ApplyOptimizer(spec_, updated, shard.first(count), rows, slots.m, slots.v);
    std::copy(updated.begin(), updated.end(), shard.begin());
    std::fill(shard.begin() + count, shard.end(), 0.0f);
  };
  PODSCALE_ASSIGN_OR_RETURN(
      GatherResult reduced,
      HierarchicalAllReduce2D(mesh_, stride_, packed, options));

  ShardedUpdateResult result;
  result.weights.resize(mesh_.num_devices());
  for (int64_t id = 0; id < mesh_.num_devices(); ++id) {
    const int peer = mesh_.CoordOf(id).x % stride_;
    result.weights[id] = plans_[peer].Unpack(reduced.payloads[id].values);
  }
  result.schedule = std::move(reduced.schedule);
  return result;
}

absl::StatusOr<ShardedUpdateResult> ShardedUpdate(
    const DeviceMesh& mesh, int stride,
    std::span<const std::vector<float>> weights_per_peer,
    std::span<const std::vector<float>> grads_per_device,
    const OptimizerSpec& spec, std::vector<ParamLayout> layouts) {
  if (layouts.empty()) {
    for (const std::vector<float>& w : weights_per_peer) {
      layouts.push_back(
          ParamLayout::Elementwise(static_cast<int64_t>(w.size())));
    }
  }
  PODSCALE_ASSIGN_OR_RETURN(
      ShardedOptimizer optimizer,
      ShardedOptimizer::Create(mesh, stride, spec, std::move(layouts)));
  return optimizer.Step(weights_per_peer, grads_per_device);
}

OptimizerCostFraction ComputeOptimizerCostFraction(
    const OptimizerCostScenario& scenario, int64_t shards) {
  const double optimizer =
      scenario.params * scenario.flops_per_param / scenario.flops_rate;
  const double sharded = optimizer / static_cast<double>(shards);
  OptimizerCostFraction out;
  out.shards = shards;
  out.unsharded = optimizer / (scenario.other_step_seconds + optimizer);
  out.sharded = sharded / (scenario.other_step_seconds + sharded);
  return out;
}

int64_t TablePlacement::PeakBytes() const {
  return device_bytes.empty()
             ? 0
             : *std::max_element(device_bytes.begin(), device_bytes.end());
}

std::string TablePlacement::ToCsv(
    std::span<const EmbeddingTable> inputs) const {
  std::string out = "table,decision,parts,rows,row_bytes,max_device_bytes\n";
  for (const TableAssignment& a : tables) {
    int64_t max_rows = 0;
    for (size_t d = 0; d < a.row_begin.size(); ++d) {
      max_rows = std::max(max_rows, a.row_end[d] - a.row_begin[d]);
    }
    const EmbeddingTable& t = inputs[a.table];
    absl::StrAppendFormat(
        &out, "%d,%s,%d,%d,%d,%d\n", a.table,
        a.decision == PlacementDecision::kReplicate ? "replicate" : "partition",
        a.parts, t.rows, t.row_bytes, max_rows * t.row_bytes);
  }
  out += "\ndevice,bytes_used,capacity\n";
  for (size_t d = 0; d < device_bytes.size(); ++d) {
    absl::StrAppendFormat(&out, "%d,%d,%d\n", d, device_bytes[d], capacity);
  }
  return out;
}

namespace {

absl::StatusOr<TablePlacement> Place(std::span<const EmbeddingTable> tables,
                                     int devices, int64_t capacity,
                                     int64_t threshold) {
  TablePlacement placement;
  placement.capacity = capacity;
  placement.device_bytes.assign(devices, 0);
  placement.tables.resize(tables.size());

  std::vector<int> order(tables.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return tables[a].bytes() > tables[b].bytes();
  });

  for (int t : order) {
    const EmbeddingTable& table = tables[t];
    TableAssignment& a = placement.tables[t];
    a.table = t;
    a.row_begin.assign(devices, 0);
    a.row_end.assign(devices, 0);
    const bool fits_replicated = std::all_of(
        placement.device_bytes.begin(), placement.device_bytes.end(),
        [&](int64_t used) { return used + table.bytes() <= capacity; });
    if (table.bytes() <= threshold && fits_replicated) {
      a.decision = PlacementDecision::kReplicate;
      a.parts = devices;
      for (int d = 0; d < devices; ++d) {
        a.row_end[d] = table.rows;
        placement.device_bytes[d] += table.bytes();
      }
      continue;
    }
    a.decision = PlacementDecision::kPartition;
    const int64_t parts = std::min<int64_t>(devices, table.rows);
    a.parts = static_cast<int>(parts);
    // Larger parts go to the least loaded devices.
    std::vector<int> by_load(devices);
    std::iota(by_load.begin(), by_load.end(), 0);
    std::stable_sort(by_load.begin(), by_load.end(), [&](int x, int y) {
      return placement.device_bytes[x] < placement.device_bytes[y];
    });
    const int64_t base = table.rows / parts;
    const int64_t extra = table.rows % parts;
    std::vector<int64_t> part_rows(devices, 0);
    for (int64_t i = 0; i < parts; ++i) {
      part_rows[by_load[i]] = base + (i < extra ? 1 : 0);
    }
    int64_t next_row = 0;
    for (int d = 0; d < devices; ++d) {
      a.row_begin[d] = next_row;
      next_row += part_rows[d];
      a.row_end[d] = next_row;
      placement.device_bytes[d] += part_rows[d] * table.row_bytes;
      if (placement.device_bytes[d] > capacity) {
        return absl::ResourceExhaustedError(absl::StrFormat(
            "table %d (%d rows x %d bytes) does not fit on %d devices of %d "
            "bytes even when partitioned",
            t, table.rows, table.row_bytes, devices, capacity));
      }
    }
  }
  return placement;
}

}  // namespace

absl::StatusOr<TablePlacement> PlaceTables(
    std::span<const EmbeddingTable> tables, int devices, int64_t capacity,
    int64_t threshold) {
  if (devices < 1 || capacity < 0) {
    return absl::InvalidArgumentError(
        "placement needs at least one device and a non-negative capacity");
  }
  for (size_t t = 0; t < tables.size(); ++t) {
    if (tables[t].rows < 1 || tables[t].row_bytes < 1) {
      return absl::InvalidArgumentError(
          absl::StrFormat("table %d must have positive rows and row_bytes", t));
    }
  }
  if (threshold < 0) threshold = capacity / 16;
  absl::StatusOr<TablePlacement> greedy =
      Place(tables, devices, capacity, threshold);
  if (greedy.ok()) return greedy;
  return Place(tables, devices, capacity, /*threshold=*/-1);
}

}  // namespace podscale

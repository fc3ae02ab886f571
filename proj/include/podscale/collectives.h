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

// Ring collectives executed numerically over in-memory payloads, plus the
// CollectiveSchedule each one implies for the cost simulator.
//
// Reduction order. Every reduced element is a left fold over ring members in
// ascending ring position: ((p0 + p1) + p2) + ... . The hierarchical 2D
// all-reduce therefore computes, for each element,
//   sum over X-group position i of (sum over y ascending of g[x_i][y])
// which is the order the test oracles reproduce.
//
// bf16. Partial sums are rounded to bf16 every time they cross a device
// boundary, i.e. after every addition of a remote contribution. Inputs tagged
// bf16 are rounded once on entry.
//
// Padding. A payload whose length is not a multiple of the shard count is
// zero-padded for the collective and the pad is stripped after all-gather.

#ifndef PODSCALE_COLLECTIVES_H_
#define PODSCALE_COLLECTIVES_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "podscale/bf16.h"
#include "podscale/topology.h"

namespace podscale {

struct Payload {
  std::vector<float> values;
  ElemType elem_type = ElemType::kF32;

  int64_t size() const { return static_cast<int64_t>(values.size()); }
  friend bool operator==(const Payload&, const Payload&) = default;
};

enum class PhaseKind { kReduceScatter, kAllGather, kBroadcast, kLocalUpdate };
enum class Direction { kUnidirectional, kBidirectional };

absl::string_view PhaseKindName(PhaseKind kind);
absl::string_view DirectionName(Direction direction);

// One synchronous bulk phase. All rings in a phase run concurrently, have the
// same length, and move the same volume per device.
struct Phase {
  PhaseKind kind = PhaseKind::kLocalUpdate;
  std::vector<std::vector<Coord>> rings;
  Direction direction = Direction::kUnidirectional;
  int element_width = 4;
  // Padded elements entering the phase on each device (reduce-scatter) or
  // leaving it (all-gather).
  int64_t payload_elements = 0;
  // Total bytes each device sends during the phase.
  int64_t bytes_per_device = 0;
  int steps = 0;

  int ring_length() const {
    return rings.empty() ? 1 : static_cast<int>(rings.front().size());
  }
  // Bytes sent per step in each active direction. Bidirectional rings split
  // every step across two counter-rotating rings.
  double bytes_per_step() const;
};

class CollectiveSchedule {
 public:
  void Add(Phase phase) { phases_.push_back(std::move(phase)); }
  void Append(const CollectiveSchedule& other);

  const std::vector<Phase>& phases() const { return phases_; }
  bool empty() const { return phases_.empty(); }
  int64_t TotalBytesPerDevice() const;

  // Header: phase,kind,direction,rings,ring_length,steps,payload_elements,
  // bytes_per_device
  std::string ToCsv() const;

 private:
  std::vector<Phase> phases_;
};

// Rounds n up to a multiple of parts.
int64_t PaddedLength(int64_t n, int64_t parts);

// Phase builders shared by the numeric collectives and the cost-only paths.
Phase ReduceScatterPhase(std::vector<std::vector<Coord>> rings,
                         int64_t padded_elements, ElemType type,
                         Direction direction);
Phase AllGatherPhase(std::vector<std::vector<Coord>> rings,
                     int64_t padded_elements, ElemType type,
                     Direction direction);

struct ShardResult {
  // shards[i] belongs to ring[i]; all have length PaddedLength(N, p) / p.
  std::vector<Payload> shards;
  CollectiveSchedule schedule;
};

struct GatherResult {
  std::vector<Payload> payloads;
  CollectiveSchedule schedule;
};

// Device i ends with shard i of the elementwise sum.
absl::StatusOr<ShardResult> RingReduceScatter(std::span<const Coord> ring,
                                              std::span<const Payload> payloads,
                                              Direction direction);

// Every device ends with the concatenation of all shards in ring order,
// truncated to logical_length when it is non-negative.
absl::StatusOr<GatherResult> RingAllGather(std::span<const Coord> ring,
                                           std::span<const Payload> shards,
                                           Direction direction,
                                           int64_t logical_length = -1);

// Reduce-scatter followed by all-gather.
absl::StatusOr<GatherResult> AllReduce(
    std::span<const Coord> ring, std::span<const Payload> payloads,
    ElemType elem_type, Direction direction = Direction::kBidirectional);

// Identifies the shard handed to the weight-update hook.
struct ShardContext {
  Coord device;
  // Model-parallel peer id (x mod stride): which weight partition this is.
  int peer = 0;
  // Offset of the first element of `values` within the logical vector.
  int64_t offset = 0;
};

// Mutates the summed gradient shard in place into the updated weight shard.
// Only logical (non-pad) elements are passed.
using UpdateFn = std::function<void(const ShardContext&, std::span<float>)>;

struct HierarchicalOptions {
  ElemType elem_type = ElemType::kF32;
  Direction y_direction = Direction::kBidirectional;
  Direction x_direction = Direction::kBidirectional;
  // Hook for the LocalUpdate phase; identity when empty.
  UpdateFn update;
};

// Y reduce-scatter, strided X reduce-scatter, local update, X all-gather,
// Y all-gather. payloads are indexed by DeviceMesh::DeviceId. Devices in one
// data-parallel group (same x mod stride) must hold equal-length payloads.
absl::StatusOr<GatherResult> HierarchicalAllReduce2D(
    const DeviceMesh& mesh, int stride, std::span<const Payload> payloads,
    const HierarchicalOptions& options = {});

// Cost-only twin of HierarchicalAllReduce2D for payloads too large to
// materialize. Produces the identical schedule.
absl::StatusOr<CollectiveSchedule> HierarchicalSchedule(
    const DeviceMesh& mesh, int stride, int64_t elements, ElemType elem_type,
    Direction y_direction = Direction::kBidirectional,
    Direction x_direction = Direction::kBidirectional);

// Cost-only ring all-reduce schedule (reduce-scatter + all-gather).
CollectiveSchedule RingAllReduceSchedule(std::span<const Coord> ring,
                                         int64_t elements, ElemType elem_type,
                                         Direction direction);

// All-reduce over the short X line of a model-parallel tile.
absl::StatusOr<GatherResult> ModelParallelAllReduce(
    const Tile& tile, std::span<const Payload> payloads,
    ElemType elem_type = ElemType::kF32,
    Direction direction = Direction::kBidirectional);

}  // namespace podscale

#endif  // PODSCALE_COLLECTIVES_H_

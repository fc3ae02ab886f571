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

#include "podscale/collectives.h"

#include <algorithm>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "podscale/status_macros.h"

namespace podscale {
namespace {

constexpr int64_t kParallelThreshold = 1 << 14;

absl::Status CheckUniform(std::span<const Payload> payloads,
                          absl::string_view what) {
  if (payloads.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(what, ": empty ring"));
  }
  const int64_t n = payloads.front().size();
  const ElemType t = payloads.front().elem_type;
  for (size_t i = 1; i < payloads.size(); ++i) {
    if (payloads[i].size() != n) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "%s: mismatched lengths (member 0 has %d, member %d has %d)", what, n,
          i, payloads[i].size()));
    }
    if (payloads[i].elem_type != t) {
      return absl::InvalidArgumentError(
          absl::StrCat(what, ": mismatched element types"));
    }
  }
  return absl::OkStatus();
}

// out[e] = fold over members of in[m][begin + e], ascending member order.
void FoldShard(std::span<const Payload> in, int64_t begin, int64_t len,
               bool bf16, std::span<float> out) {
  const int64_t members = static_cast<int64_t>(in.size());
#pragma omp parallel for schedule(static) if (len * members > \
                                                  kParallelThreshold)
  for (int64_t e = 0; e < len; ++e) {
    const int64_t src = begin + e;
    float acc = src < in[0].size() ? in[0].values[src] : 0.0f;
    for (int64_t m = 1; m < members; ++m) {
      const float v = src < in[m].size() ? in[m].values[src] : 0.0f;
      acc = acc + v;
      if (bf16) acc = RoundToBf16(acc);
    }
    out[e] = acc;
  }
}

std::vector<std::vector<Coord>> SingleRing(std::span<const Coord> ring) {
  return {std::vector<Coord>(ring.begin(), ring.end())};
}

}  // namespace

absl::string_view PhaseKindName(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::kReduceScatter:
      return "reduce_scatter";
    case PhaseKind::kAllGather:
      return "all_gather";
    case PhaseKind::kBroadcast:
      return "broadcast";
    case PhaseKind::kLocalUpdate:
      return "local_update";
  }
  return "unknown";
}

absl::string_view DirectionName(Direction direction) {
  return direction == Direction::kBidirectional ? "bidirectional"
                                                : "unidirectional";
}

double Phase::bytes_per_step() const {
  if (steps == 0) return 0.0;
  const double per_step = static_cast<double>(bytes_per_device) / steps;
  return direction == Direction::kBidirectional ? per_step / 2.0 : per_step;
}

void CollectiveSchedule::Append(const CollectiveSchedule& other) {
  phases_.insert(phases_.end(), other.phases_.begin(), other.phases_.end());
}

int64_t CollectiveSchedule::TotalBytesPerDevice() const {
  int64_t total = 0;
  for (const Phase& p : phases_) total += p.bytes_per_device;
  return total;
}

std::string CollectiveSchedule::ToCsv() const {
  std::string out =
      "phase,kind,direction,rings,ring_length,steps,payload_elements,"
      "bytes_per_device\n";
  for (size_t i = 0; i < phases_.size(); ++i) {
    const Phase& p = phases_[i];
    absl::StrAppendFormat(&out, "%d,%s,%s,%d,%d,%d,%d,%d\n", i,
                          PhaseKindName(p.kind), DirectionName(p.direction),
                          p.rings.size(), p.ring_length(), p.steps,
                          p.payload_elements, p.bytes_per_device);
  }
  return out;
}

int64_t PaddedLength(int64_t n, int64_t parts) {
  return (n + parts - 1) / parts * parts;
}

Phase ReduceScatterPhase(std::vector<std::vector<Coord>> rings,
                         int64_t padded_elements, ElemType type,
                         Direction direction) {
  Phase phase;
  phase.kind = PhaseKind::kReduceScatter;
  phase.rings = std::move(rings);
  phase.direction = direction;
  phase.element_width = ElementWidth(type);
  phase.payload_elements = padded_elements;
  const int p = phase.ring_length();
  phase.steps = p - 1;
  phase.bytes_per_device =
      static_cast<int64_t>(p - 1) * (padded_elements / p) * phase.element_width;
  return phase;
}

Phase AllGatherPhase(std::vector<std::vector<Coord>> rings,
                     int64_t padded_elements, ElemType type,
                     Direction direction) {
  Phase phase =
      ReduceScatterPhase(std::move(rings), padded_elements, type, direction);
  phase.kind = PhaseKind::kAllGather;
  return phase;
}

absl::StatusOr<ShardResult> RingReduceScatter(std::span<const Coord> ring,
                                              std::span<const Payload> payloads,
                                              Direction direction) {
  if (ring.size() != payloads.size()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("reduce-scatter: ring has %d members but %d payloads",
                        ring.size(), payloads.size()));
  }
  PODSCALE_RETURN_IF_ERROR(CheckUniform(payloads, "reduce-scatter"));
  const int64_t p = static_cast<int64_t>(ring.size());
  const ElemType type = payloads.front().elem_type;
  const int64_t padded = PaddedLength(payloads.front().size(), p);
  const int64_t shard_len = padded / p;
  ShardResult result;
  result.shards.resize(p);
  for (int64_t i = 0; i < p; ++i) {
    Payload& shard = result.shards[i];
    shard.elem_type = type;
    shard.values.resize(shard_len);
    FoldShard(payloads, i * shard_len, shard_len, type == ElemType::kBF16,
              shard.values);
  }
  if (p > 1) {
    result.schedule.Add(
        ReduceScatterPhase(SingleRing(ring), padded, type, direction));
  }
  return result;
}

absl::StatusOr<GatherResult> RingAllGather(std::span<const Coord> ring,
                                           std::span<const Payload> shards,
                                           Direction direction,
                                           int64_t logical_length) {
  if (ring.size() != shards.size()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("all-gather: ring has %d members but %d shards",
                        ring.size(), shards.size()));
  }
  PODSCALE_RETURN_IF_ERROR(CheckUniform(shards, "all-gather"));
  const int64_t p = static_cast<int64_t>(ring.size());
  const int64_t padded = p * shards.front().size();
  if (logical_length > padded) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "all-gather: logical length %d exceeds gathered length %d",
        logical_length, padded));
  }
  Payload full;
  full.elem_type = shards.front().elem_type;
  full.values.reserve(padded);
  for (const Payload& s : shards) {
    full.values.insert(full.values.end(), s.values.begin(), s.values.end());
  }
  if (logical_length >= 0) full.values.resize(logical_length);
  GatherResult result;
  result.payloads.assign(p, full);
  if (p > 1) {
    result.schedule.Add(
        AllGatherPhase(SingleRing(ring), padded, full.elem_type, direction));
  }
  return result;
}

absl::StatusOr<GatherResult> AllReduce(std::span<const Coord> ring,
                                       std::span<const Payload> payloads,
                                       ElemType elem_type,
                                       Direction direction) {
  std::vector<Payload> wire(payloads.begin(), payloads.end());
  for (Payload& w : wire) {
    if (elem_type == ElemType::kBF16) RoundToBf16InPlace(w.values);
    w.elem_type = elem_type;
  }
  PODSCALE_ASSIGN_OR_RETURN(ShardResult rs,
                            RingReduceScatter(ring, wire, direction));
  const int64_t n = wire.front().size();
  PODSCALE_ASSIGN_OR_RETURN(GatherResult ag,
                            RingAllGather(ring, rs.shards, direction, n));
  rs.schedule.Append(ag.schedule);
  ag.schedule = std::move(rs.schedule);
  return ag;
}

CollectiveSchedule RingAllReduceSchedule(std::span<const Coord> ring,
                                         int64_t elements, ElemType elem_type,
                                         Direction direction) {
  CollectiveSchedule schedule;
  const int64_t p = static_cast<int64_t>(ring.size());
  if (p <= 1) return schedule;
  const int64_t padded = PaddedLength(elements, p);
  schedule.Add(
      ReduceScatterPhase(SingleRing(ring), padded, elem_type, direction));
  schedule.Add(AllGatherPhase(SingleRing(ring), padded, elem_type, direction));
  return schedule;
}

absl::StatusOr<CollectiveSchedule> HierarchicalSchedule(
    const DeviceMesh& mesh, int stride, int64_t elements, ElemType elem_type,
    Direction y_direction, Direction x_direction) {
  if (stride < 1 || mesh.x_size() % stride != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "stride %d does not divide x_size %d", stride, mesh.x_size()));
  }
  const int gy = mesh.y_size();
  const int gx = mesh.x_size() / stride;
  const int64_t padded = PaddedLength(elements, static_cast<int64_t>(gy) * gx);

  std::vector<std::vector<Coord>> y_rings;
  for (int x = 0; x < mesh.x_size(); ++x) y_rings.push_back(Column(mesh, x));
  std::vector<std::vector<Coord>> x_rings;
  for (int y = 0; y < gy; ++y) {
    for (int o = 0; o < stride; ++o) {
      PODSCALE_ASSIGN_OR_RETURN(std::vector<Coord> ring,
                                RingXWithStride(mesh, y, stride, o));
      x_rings.push_back(std::move(ring));
    }
  }
  std::vector<std::vector<Coord>> singles;
  for (int64_t id = 0; id < mesh.num_devices(); ++id) {
    singles.push_back({mesh.CoordOf(id)});
  }

  CollectiveSchedule schedule;
  if (gy > 1) {
    schedule.Add(ReduceScatterPhase(y_rings, padded, elem_type, y_direction));
  }
  if (gx > 1) {
    schedule.Add(
        ReduceScatterPhase(x_rings, padded / gy, elem_type, x_direction));
  }
  Phase update;
  update.kind = PhaseKind::kLocalUpdate;
  update.rings = std::move(singles);
  update.element_width = ElementWidth(elem_type);
  update.payload_elements = padded / (static_cast<int64_t>(gy) * gx);
  schedule.Add(std::move(update));
  if (gx > 1) {
    schedule.Add(AllGatherPhase(x_rings, padded / gy, elem_type, x_direction));
  }
  if (gy > 1) {
    schedule.Add(AllGatherPhase(y_rings, padded, elem_type, y_direction));
  }
  return schedule;
}

absl::StatusOr<GatherResult> HierarchicalAllReduce2D(
    const DeviceMesh& mesh, int stride, std::span<const Payload> payloads,
    const HierarchicalOptions& options) {
  if (stride < 1 || mesh.x_size() % stride != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "stride %d does not divide x_size %d", stride, mesh.x_size()));
  }
  if (static_cast<int64_t>(payloads.size()) != mesh.num_devices()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("expected one payload per device (%d), got %d",
                        mesh.num_devices(), payloads.size()));
  }
  const ElemType type = options.elem_type;
  const bool bf16 = type == ElemType::kBF16;
  const int gy = mesh.y_size();
  const int gx = mesh.x_size() / stride;

  // Logical length per data-parallel group.
  std::vector<int64_t> group_len(stride, -1);
  int64_t max_len = 0;
  for (int64_t id = 0; id < mesh.num_devices(); ++id) {
    const Coord c = mesh.CoordOf(id);
    const int peer = c.x % stride;
    const int64_t n = payloads[id].size();
    if (group_len[peer] < 0) {
      group_len[peer] = n;
    } else if (group_len[peer] != n) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "device %s holds %d elements but its data-parallel group holds %d",
          c.ToString(), n, group_len[peer]));
    }
    max_len = std::max(max_len, n);
  }

  // Wire copies, padded so that both reduce-scatters split evenly.
  std::vector<Payload> state(mesh.num_devices());
  for (int64_t id = 0; id < mesh.num_devices(); ++id) {
    const int peer = mesh.CoordOf(id).x % stride;
    Payload& w = state[id];
    w.elem_type = type;
    w.values = payloads[id].values;
    w.values.resize(
        PaddedLength(group_len[peer], static_cast<int64_t>(gy) * gx), 0.0f);
    if (bf16) RoundToBf16InPlace(w.values);
  }

  // (1) Reduce-scatter along each Y column; (x, y) keeps Y-shard y.
  for (int x = 0; x < mesh.x_size(); ++x) {
    const std::vector<Coord> column = Column(mesh, x);
    std::vector<Payload> in;
    in.reserve(gy);
    for (Coord c : column) in.push_back(std::move(state[mesh.DeviceId(c)]));
    PODSCALE_ASSIGN_OR_RETURN(
        ShardResult rs, RingReduceScatter(column, in, options.y_direction));
    for (int y = 0; y < gy; ++y) {
      state[mesh.DeviceId(column[y])] = std::move(rs.shards[y]);
    }
  }

  // (2) Reduce-scatter the Y-shards along each strided X group; (3) update.
  std::vector<std::vector<Coord>> x_groups;
  for (int y = 0; y < gy; ++y) {
    for (int o = 0; o < stride; ++o) {
      PODSCALE_ASSIGN_OR_RETURN(std::vector<Coord> ring,
                                RingXWithStride(mesh, y, stride, o));
      std::vector<Payload> in;
      in.reserve(gx);
      for (Coord c : ring) in.push_back(std::move(state[mesh.DeviceId(c)]));
      const int64_t y_shard_len = in.front().size();
      PODSCALE_ASSIGN_OR_RETURN(
          ShardResult rs, RingReduceScatter(ring, in, options.x_direction));
      const int64_t shard_len = y_shard_len / gx;
      for (int i = 0; i < gx; ++i) {
        Payload& shard = rs.shards[i];
        if (options.update) {
          const int64_t offset = y * y_shard_len + i * shard_len;
          const int64_t valid =
              std::clamp<int64_t>(group_len[o] - offset, 0, shard_len);
          ShardContext ctx{ring[i], o, offset};
          options.update(ctx, std::span<float>(shard.values).first(valid));
          if (bf16) RoundToBf16InPlace(shard.values);
        }
        state[mesh.DeviceId(ring[i])] = std::move(shard);
      }
      x_groups.push_back(std::move(ring));
    }
  }

  // (4) All-gather along X.
  for (const std::vector<Coord>& ring : x_groups) {
    std::vector<Payload> in;
    in.reserve(ring.size());
    for (Coord c : ring) in.push_back(std::move(state[mesh.DeviceId(c)]));
    PODSCALE_ASSIGN_OR_RETURN(GatherResult ag,
                              RingAllGather(ring, in, options.x_direction));
    for (size_t i = 0; i < ring.size(); ++i) {
      state[mesh.DeviceId(ring[i])] = std::move(ag.payloads[i]);
    }
  }

  // (5) All-gather along Y and strip the pad.
  for (int x = 0; x < mesh.x_size(); ++x) {
    const std::vector<Coord> column = Column(mesh, x);
    std::vector<Payload> in;
    in.reserve(gy);
    for (Coord c : column) in.push_back(std::move(state[mesh.DeviceId(c)]));
    PODSCALE_ASSIGN_OR_RETURN(
        GatherResult ag,
        RingAllGather(column, in, options.y_direction, group_len[x % stride]));
    for (int y = 0; y < gy; ++y) {
      state[mesh.DeviceId(column[y])] = std::move(ag.payloads[y]);
    }
  }

  GatherResult result;
  result.payloads = std::move(state);
  PODSCALE_ASSIGN_OR_RETURN(
      result.schedule,
      HierarchicalSchedule(mesh, stride, max_len, type, options.y_direction,
                           options.x_direction));
  return result;
}

absl::StatusOr<GatherResult> ModelParallelAllReduce(
    const Tile& tile, std::span<const Payload> payloads, ElemType elem_type,
    Direction direction) {
  if (tile.width < 1) {
    return absl::InvalidArgumentError("tile width must be positive");
  }
  const std::vector<Coord> ring = tile.Members();
  return AllReduce(ring, payloads, elem_type, direction);
}

}  // namespace podscale

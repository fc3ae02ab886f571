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

// 2D mesh/torus device topology with multipod structure.
//
// Pods are concatenated along X. Links between (x, y) and (x + 1, y) that sit
// on a pod seam are cross-pod links; wrap links exist only on axes whose torus
// flag is set. Chips see only their row and column peers (sparse routing),
// which bounds the routing table size.

#ifndef PODSCALE_TOPOLOGY_H_
#define PODSCALE_TOPOLOGY_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace podscale {

struct Coord {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const Coord&, const Coord&) = default;
  std::string ToString() const;
};

enum class LinkClass { kWithinPod = 0, kCrossPod = 1, kTorusWrap = 2 };
inline constexpr int kNumLinkClasses = 3;

absl::string_view LinkClassName(LinkClass link);

struct Neighbor {
  Coord coord;
  LinkClass link;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct Link {
  Coord a;
  Coord b;
  LinkClass link;
};

struct MeshOptions {
  bool x_torus = false;
  int devices_per_host = 8;
  // Permit model-parallel tiles to straddle a cross-pod seam.
  bool allow_tile_straddle = false;
};

class DeviceMesh {
 public:
  static absl::StatusOr<DeviceMesh> Create(int x_size, int y_size, int pods,
                                           bool y_torus,
                                           MeshOptions options = {});

  int x_size() const { return x_size_; }
  int y_size() const { return y_size_; }
  int pods() const { return pods_; }
  int pod_x() const { return x_size_ / pods_; }
  bool y_torus() const { return y_torus_; }
  bool x_torus() const { return options_.x_torus; }
  const MeshOptions& options() const { return options_; }
  int64_t num_devices() const {
    return static_cast<int64_t>(x_size_) * y_size_;
  }

  bool Contains(Coord c) const {
    return c.x >= 0 && c.x < x_size_ && c.y >= 0 && c.y < y_size_;
  }
  absl::Status CheckContains(Coord c) const;

  // Row-major device id: y * x_size + x.
  int64_t DeviceId(Coord c) const {
    return static_cast<int64_t>(c.y) * x_size_ + c.x;
  }
  Coord CoordOf(int64_t id) const {
    return Coord{static_cast<int>(id % x_size_),
                 static_cast<int>(id / x_size_)};
  }
  int64_t HostOf(Coord c) const {
    return DeviceId(c) / options_.devices_per_host;
  }
  int PodOf(Coord c) const { return c.x / pod_x(); }

  // Class of the direct link between a and b, or nullopt if not adjacent.
  std::optional<LinkClass> LinkBetween(Coord a, Coord b) const;

  friend bool operator==(const DeviceMesh&, const DeviceMesh&) = default;

 private:
  DeviceMesh(int x_size, int y_size, int pods, bool y_torus,
             MeshOptions options)
      : x_size_(x_size),
        y_size_(y_size),
        pods_(pods),
        y_torus_(y_torus),
        options_(options) {}

  int x_size_;
  int y_size_;
  int pods_;
  bool y_torus_;
  MeshOptions options_;
};

inline bool operator==(const MeshOptions& a, const MeshOptions& b) {
  return a.x_torus == b.x_torus && a.devices_per_host == b.devices_per_host &&
         a.allow_tile_straddle == b.allow_tile_straddle;
}

// pods * pod_x by pod_y mesh. Fails only on non-positive arguments.
absl::StatusOr<DeviceMesh> BuildMultipod(int pods, int pod_x, int pod_y,
                                         bool y_torus,
                                         MeshOptions options = {});

// Mesh-adjacent devices including torus wraps, sorted by coordinate.
absl::StatusOr<std::vector<Neighbor>> Neighbors(const DeviceMesh& mesh,
                                                Coord d);

// Every physical link, each reported once.
std::vector<Link> AllLinks(const DeviceMesh& mesh);

// Devices sharing d's row or column, excluding d.
absl::StatusOr<std::vector<Coord>> VisibleSet(const DeviceMesh& mesh, Coord d);
// Same count without materializing the set.
int64_t VisibleSetSize(const DeviceMesh& mesh);

// Y column at x as a cycle. Requires the Y torus.
absl::StatusOr<std::vector<Coord>> RingY(const DeviceMesh& mesh, int x);
// Y column at x in ascending y, with or without wrap links.
std::vector<Coord> Column(const DeviceMesh& mesh, int x);

// (offset, y), (offset + stride, y), ... : the X reduction group of the
// model-parallel peer `offset`. stride 1 is the full row.
absl::StatusOr<std::vector<Coord>> RingXWithStride(const DeviceMesh& mesh,
                                                   int y, int stride,
                                                   int offset);

// A model-parallel group: `width` consecutive devices along X in one row.
struct Tile {
  Coord anchor;
  int width = 1;

  std::vector<Coord> Members() const;
  friend bool operator==(const Tile&, const Tile&) = default;
};

// Partitions the mesh into tiles of the given width. Fails if width does not
// divide x_size, or if a tile would straddle a pod seam and the mesh does not
// allow it.
absl::StatusOr<std::vector<Tile>> Tiles(const DeviceMesh& mesh, int width);

// The tile containing d.
absl::StatusOr<Tile> TileOf(const DeviceMesh& mesh, int width, Coord d);

// Physical hops along one axis from a to b, taking the wrap link when the
// axis is a torus and it is shorter. a and b must share a row or column.
absl::StatusOr<std::vector<LinkClass>> RouteLinks(const DeviceMesh& mesh,
                                                  Coord a, Coord b);

}  // namespace podscale

#endif  // PODSCALE_TOPOLOGY_H_

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

#include "podscale/topology.h"

#include <algorithm>
#include <cstdlib>

#include "absl/strings/str_format.h"

namespace podscale {
namespace {

// A wrap link only exists as a distinct link when the axis has 3+ devices;
// with 2 it coincides with the direct link and with 1 it would be a self-loop.
bool HasWrap(bool torus, int extent) { return torus && extent > 2; }

}  // namespace

std::string Coord::ToString() const { return absl::StrFormat("(%d,%d)", x, y); }

absl::string_view LinkClassName(LinkClass link) {
  switch (link) {
    case LinkClass::kWithinPod:
      return "within_pod";
    case LinkClass::kCrossPod:
      return "cross_pod";
    case LinkClass::kTorusWrap:
      return "torus_wrap";
  }
  return "unknown";
}

absl::StatusOr<DeviceMesh> DeviceMesh::Create(int x_size, int y_size, int pods,
                                              bool y_torus,
                                              MeshOptions options) {
  if (x_size < 1 || y_size < 1 || pods < 1) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "mesh extents must be positive, got x_size=%d y_size=%d pods=%d",
        x_size, y_size, pods));
  }
  if (x_size % pods != 0) {
    return absl::InvalidArgumentError(
        absl::StrFormat("x_size %d is not divisible by pods %d", x_size, pods));
  }
  if (options.devices_per_host < 1) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "devices_per_host must be positive, got %d", options.devices_per_host));
  }
  return DeviceMesh(x_size, y_size, pods, y_torus, options);
}

absl::Status DeviceMesh::CheckContains(Coord c) const {
  if (!Contains(c)) {
    return absl::OutOfRangeError(absl::StrFormat(
        "coordinate %s outside %dx%d mesh", c.ToString(), x_size_, y_size_));
  }
  return absl::OkStatus();
}

std::optional<LinkClass> DeviceMesh::LinkBetween(Coord a, Coord b) const {
  if (!Contains(a) || !Contains(b) || a == b) return std::nullopt;
  if (a.y == b.y) {
    const int lo = std::min(a.x, b.x);
    const int hi = std::max(a.x, b.x);
    if (hi - lo == 1) {
      return hi % pod_x() == 0 ? LinkClass::kCrossPod : LinkClass::kWithinPod;
    }
    if (HasWrap(options_.x_torus, x_size_) && lo == 0 && hi == x_size_ - 1) {
      return LinkClass::kTorusWrap;
    }
    return std::nullopt;
  }
  if (a.x == b.x) {
    const int lo = std::min(a.y, b.y);
    const int hi = std::max(a.y, b.y);
    if (hi - lo == 1) return LinkClass::kWithinPod;
    if (HasWrap(y_torus_, y_size_) && lo == 0 && hi == y_size_ - 1) {
      return LinkClass::kTorusWrap;
    }
  }
  return std::nullopt;
}

absl::StatusOr<DeviceMesh> BuildMultipod(int pods, int pod_x, int pod_y,
                                         bool y_torus, MeshOptions options) {
  if (pods < 1 || pod_x < 1 || pod_y < 1) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "multipod arguments must be >= 1, got pods=%d pod_x=%d pod_y=%d", pods,
        pod_x, pod_y));
  }
  return DeviceMesh::Create(pods * pod_x, pod_y, pods, y_torus, options);
}

absl::StatusOr<std::vector<Neighbor>> Neighbors(const DeviceMesh& mesh,
                                                Coord d) {
  if (absl::Status s = mesh.CheckContains(d); !s.ok()) return s;
  std::vector<Neighbor> out;
  auto consider = [&](Coord c) {
    if (auto link = mesh.LinkBetween(d, c)) {
      Neighbor n{c, *link};
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    }
  };
  const int xs = mesh.x_size();
  const int ys = mesh.y_size();
  consider({(d.x + 1) % xs, d.y});
  consider({(d.x - 1 + xs) % xs, d.y});
  consider({d.x, (d.y + 1) % ys});
  consider({d.x, (d.y - 1 + ys) % ys});
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.coord < b.coord;
  });
  return out;
}

std::vector<Link> AllLinks(const DeviceMesh& mesh) {
  std::vector<Link> links;
  for (int y = 0; y < mesh.y_size(); ++y) {
    for (int x = 0; x < mesh.x_size(); ++x) {
      const Coord a{x, y};
      for (Coord b : {Coord{x + 1, y}, Coord{x, y + 1}}) {
        if (auto link = mesh.LinkBetween(a, b)) links.push_back({a, b, *link});
      }
      if (x == 0 && HasWrap(mesh.x_torus(), mesh.x_size())) {
        links.push_back({a, {mesh.x_size() - 1, y}, LinkClass::kTorusWrap});
      }
      if (y == 0 && HasWrap(mesh.y_torus(), mesh.y_size())) {
        links.push_back({a, {x, mesh.y_size() - 1}, LinkClass::kTorusWrap});
      }
    }
  }
  return links;
}

absl::StatusOr<std::vector<Coord>> VisibleSet(const DeviceMesh& mesh, Coord d) {
  if (absl::Status s = mesh.CheckContains(d); !s.ok()) return s;
  std::vector<Coord> out;
  out.reserve(VisibleSetSize(mesh));
  for (int x = 0; x < mesh.x_size(); ++x) {
    if (x != d.x) out.push_back({x, d.y});
  }
  for (int y = 0; y < mesh.y_size(); ++y) {
    if (y != d.y) out.push_back({d.x, y});
  }
  return out;
}

int64_t VisibleSetSize(const DeviceMesh& mesh) {
  return static_cast<int64_t>(mesh.x_size() - 1) + (mesh.y_size() - 1);
}

absl::StatusOr<std::vector<Coord>> RingY(const DeviceMesh& mesh, int x) {
  if (!mesh.y_torus()) {
    return absl::FailedPreconditionError(
        "Y ring requires torus wrap links on Y (y_torus=false)");
  }
  if (x < 0 || x >= mesh.x_size()) {
    return absl::OutOfRangeError(
        absl::StrFormat("column %d outside x range [0, %d)", x, mesh.x_size()));
  }
  return Column(mesh, x);
}

std::vector<Coord> Column(const DeviceMesh& mesh, int x) {
  std::vector<Coord> out;
  out.reserve(mesh.y_size());
  for (int y = 0; y < mesh.y_size(); ++y) out.push_back({x, y});
  return out;
}

absl::StatusOr<std::vector<Coord>> RingXWithStride(const DeviceMesh& mesh,
                                                   int y, int stride,
                                                   int offset) {
  if (stride < 1 || mesh.x_size() % stride != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "stride %d does not divide x_size %d", stride, mesh.x_size()));
  }
  if (offset < 0 || offset >= stride) {
    return absl::InvalidArgumentError(
        absl::StrFormat("offset %d outside [0, %d)", offset, stride));
  }
  if (y < 0 || y >= mesh.y_size()) {
    return absl::OutOfRangeError(
        absl::StrFormat("row %d outside y range [0, %d)", y, mesh.y_size()));
  }
  std::vector<Coord> out;
  out.reserve(mesh.x_size() / stride);
  for (int x = offset; x < mesh.x_size(); x += stride) out.push_back({x, y});
  return out;
}

std::vector<Coord> Tile::Members() const {
  std::vector<Coord> out;
  out.reserve(width);
  for (int i = 0; i < width; ++i) out.push_back({anchor.x + i, anchor.y});
  return out;
}

absl::StatusOr<std::vector<Tile>> Tiles(const DeviceMesh& mesh, int width) {
  if (width < 1 || mesh.x_size() % width != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "tile width %d does not divide x_size %d", width, mesh.x_size()));
  }
  if (!mesh.options().allow_tile_straddle && mesh.pod_x() % width != 0) {
    return absl::InvalidArgumentError(
        absl::StrFormat("tile width %d would straddle pod seams (pod_x=%d)",
                        width, mesh.pod_x()));
  }
  std::vector<Tile> tiles;
  tiles.reserve(mesh.num_devices() / width);
  for (int y = 0; y < mesh.y_size(); ++y) {
    for (int x = 0; x < mesh.x_size(); x += width) {
      tiles.push_back(Tile{{x, y}, width});
    }
  }
  return tiles;
}

absl::StatusOr<Tile> TileOf(const DeviceMesh& mesh, int width, Coord d) {
  if (absl::Status s = mesh.CheckContains(d); !s.ok()) return s;
  auto tiles = Tiles(mesh, width);
  if (!tiles.ok()) return tiles.status();
  return Tile{{d.x - d.x % width, d.y}, width};
}

absl::StatusOr<std::vector<LinkClass>> RouteLinks(const DeviceMesh& mesh,
                                                  Coord a, Coord b) {
  if (absl::Status s = mesh.CheckContains(a); !s.ok()) return s;
  if (absl::Status s = mesh.CheckContains(b); !s.ok()) return s;
  if (a.x != b.x && a.y != b.y) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%s and %s share neither row nor column; not routable with "
        "row/column-only visibility",
        a.ToString(), b.ToString()));
  }
  std::vector<LinkClass> links;
  if (a == b) return links;
  const bool along_x = a.y == b.y;
  const int extent = along_x ? mesh.x_size() : mesh.y_size();
  const bool wrap = HasWrap(along_x ? mesh.x_torus() : mesh.y_torus(), extent);
  const int from = along_x ? a.x : a.y;
  const int to = along_x ? b.x : b.y;
  const int forward = ((to - from) % extent + extent) % extent;
  int step;
  int hops;
  if (wrap) {
    const int backward = extent - forward;
    step = forward <= backward ? 1 : -1;
    hops = std::min(forward, backward);
  } else {
    step = to > from ? 1 : -1;
    hops = std::abs(to - from);
  }
  Coord cur = a;
  for (int i = 0; i < hops; ++i) {
    Coord next = cur;
    int& axis = along_x ? next.x : next.y;
    axis = ((axis + step) % extent + extent) % extent;
    auto link = mesh.LinkBetween(cur, next);
    if (!link.has_value()) {
      return absl::InternalError("route stepped onto a missing link");
    }
    links.push_back(*link);
    cur = next;
  }
  return links;
}

}  // namespace podscale

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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "podscale/status_macros.h"

namespace podscale {
namespace {

double Imbalance(std::span<const int64_t> work) {
  if (work.empty()) return 1.0;
  const int64_t total = std::accumulate(work.begin(), work.end(), int64_t{0});
  if (total == 0) return 1.0;
  const int64_t peak = *std::max_element(work.begin(), work.end());
  return static_cast<double>(peak) * static_cast<double>(work.size()) /
         static_cast<double>(total);
}

absl::Status CheckMatrix(const Tensor& t, absl::string_view name) {
  if (t.rank() != 2) {
    return absl::InvalidArgumentError(
        absl::StrCat(name, " must be rank 2, got ", t.ShapeString()));
  }
  return absl::OkStatus();
}

std::vector<Coord> RowRing(int parts) {
  std::vector<Coord> ring(parts);
  for (int i = 0; i < parts; ++i) ring[i] = Coord{i, 0};
  return ring;
}

// Offsets of the SplitExtents pieces, with a trailing total.
std::vector<int64_t> SplitOffsets(int64_t extent, int parts) {
  std::vector<int64_t> offsets{0};
  for (int64_t e : SplitExtents(extent, parts)) {
    offsets.push_back(offsets.back() + e);
  }
  return offsets;
}

// Part of `spec` that device g holds.
int PartOf(const ShardSpec& spec, int g, int devices) {
  return g / (devices / spec.parts);
}

std::vector<int64_t> Strides(std::span<const int64_t> shape) {
  std::vector<int64_t> strides(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) {
    strides[i] = strides[i + 1] * shape[i + 1];
  }
  return strides;
}

// Half-open index range along the split dim held by device g; the full
// extent for replicated specs.
std::pair<int64_t, int64_t> HeldRange(const ShardSpec& spec,
                                      std::span<const int64_t> shape, int g,
                                      int devices) {
  if (!spec.split_dim) return {0, shape.empty() ? 1 : shape[0]};
  const std::vector<int64_t> offsets =
      SplitOffsets(shape[*spec.split_dim], spec.parts);
  const int part = PartOf(spec, g, devices);
  return {offsets[part], offsets[part + 1]};
}

bool Holds(const ShardSpec& spec, std::span<const int64_t> shape, int g,
           int devices, std::span<const int64_t> index) {
  if (!spec.split_dim) return true;
  const auto [lo, hi] = HeldRange(spec, shape, g, devices);
  const int64_t i = index[*spec.split_dim];
  return i >= lo && i < hi;
}

}  // namespace

std::string PartitionReportCsv(std::span<const PartitionReport> rows) {
  std::string out = "op,parts,elements_moved,scalar_flops,imbalance_ratio\n";
  for (const PartitionReport& r : rows) {
    absl::StrAppendFormat(&out, "%s,%d,%d,%d,%.17g\n", r.op, r.parts,
                          r.elements_moved, r.scalar_flops, r.imbalance_ratio);
  }
  return out;
}

std::vector<int64_t> SplitExtents(int64_t extent, int parts) {
  std::vector<int64_t> out(parts, extent / parts);
  out.back() += extent % parts;
  return out;
}

absl::StatusOr<Tensor> Conv2D(const Tensor& image, const Tensor& kernel) {
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(image, "image"));
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(kernel, "kernel"));
  const int64_t k = kernel.rows();
  if (kernel.cols() != k) {
    return absl::InvalidArgumentError(
        absl::StrCat("kernel must be square, got ", kernel.ShapeString()));
  }
  if (k % 2 == 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("kernel extent must be odd, got ", k));
  }
  const int64_t h = image.rows();
  const int64_t w = image.cols();
  const int64_t r = k / 2;
  Tensor out({h, w});
#pragma omp parallel for schedule(static) if (h * w * k * k > 65536)
  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      float acc = 0.0f;
      for (int64_t di = 0; di < k; ++di) {
        const int64_t si = i + di - r;
        if (si < 0 || si >= h) continue;
        for (int64_t dj = 0; dj < k; ++dj) {
          const int64_t sj = j + dj - r;
          if (sj < 0 || sj >= w) continue;
          acc += image.at(si, sj) * kernel.at(di, dj);
        }
      }
      out.at(i, j) = acc;
    }
  }
  return out;
}

absl::StatusOr<Tensor> MatMul(const Tensor& a, const Tensor& b) {
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(a, "lhs"));
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(b, "rhs"));
  if (a.cols() != b.rows()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("matmul dimension mismatch: %s x %s", a.ShapeString(),
                        b.ShapeString()));
  }
  const int64_t m = a.rows();
  const int64_t kk = a.cols();
  const int64_t n = b.cols();
  Tensor out({m, n});
#pragma omp parallel for schedule(static) if (m * n * kk > 65536)
  for (int64_t i = 0; i < m; ++i) {
    float* row = &out.at(i, 0);
    for (int64_t k = 0; k < kk; ++k) {
      const float aik = a.at(i, k);
      const float* brow = &b.values()[k * n];
      for (int64_t j = 0; j < n; ++j) row[j] += aik * brow[j];
    }
  }
  return out;
}

absl::StatusOr<PartitionedConv> SpatialPartitionConv(const Tensor& image,
                                                     const Tensor& kernel,
                                                     int parts, int split_dim) {
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(image, "image"));
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(kernel, "kernel"));
  if (parts < 1) return absl::InvalidArgumentError("parts must be positive");
  if (split_dim != 0 && split_dim != 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("split_dim must be 0 (H) or 1 (W), got ", split_dim));
  }
  if (kernel.rows() % 2 == 0 || kernel.cols() != kernel.rows()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "kernel must be square with odd extent, got ", kernel.ShapeString()));
  }
  const HaloSpec halo{static_cast<int>(kernel.rows())};
  const int64_t hw = halo.halo_width();
  const int64_t extent = split_dim == 0 ? image.rows() : image.cols();
  const int64_t cross = split_dim == 0 ? image.cols() : image.rows();
  if (extent < parts) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "cannot split extent %d into %d strips", extent, parts));
  }
  if (parts > 1 && extent / parts < hw) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "strip of %d rows is thinner than halo width %d", extent / parts, hw));
  }
  const std::vector<int64_t> offsets = SplitOffsets(extent, parts);
  // Element (i along the split dim, c across it) of a row-major matrix.
  auto index = [split_dim](int64_t i, int64_t c, int64_t cols) {
    return split_dim == 0 ? i * cols + c : c * cols + i;
  };

  PartitionedConv result;
  result.report.op = "spatial_conv";
  result.report.parts = parts;
  result.report.per_device_moved.assign(parts, 0);
  result.output = Tensor(image.shape());
  std::vector<int64_t> work(parts);
  std::vector<absl::Status> status(parts);
#pragma omp parallel for schedule(dynamic) if (parts > 1)
  for (int p = 0; p < parts; ++p) {
    const int64_t lo = offsets[p];
    const int64_t hi = offsets[p + 1];
    const int64_t before = p > 0 ? hw : 0;
    const int64_t after = p + 1 < parts ? hw : 0;
    // Owned strip plus received halo; the image edge stays zero padded.
    const int64_t span = before + (hi - lo) + after;
    Tensor local(split_dim == 0 ? std::vector<int64_t>{span, cross}
                                : std::vector<int64_t>{cross, span});
    const int64_t local_cols = local.cols();
    for (int64_t i = lo - before; i < hi + after; ++i) {
      for (int64_t c = 0; c < cross; ++c) {
        local.values()[index(i - lo + before, c, local_cols)] =
            image.values()[index(i, c, image.cols())];
      }
    }
    result.report.per_device_moved[p] = (before + after) * cross;
    absl::StatusOr<Tensor> conv = Conv2D(local, kernel);
    if (!conv.ok()) {
      status[p] = conv.status();
      continue;
    }
    for (int64_t i = lo; i < hi; ++i) {
      for (int64_t c = 0; c < cross; ++c) {
        result.output.values()[index(i, c, image.cols())] =
            conv->values()[index(i - lo + before, c, local_cols)];
      }
    }
    work[p] = (hi - lo) * cross * kernel.rows() * kernel.cols();
  }
  for (const absl::Status& st : status) PODSCALE_RETURN_IF_ERROR(st);

  for (int64_t moved : result.report.per_device_moved) {
    result.report.elements_moved += moved;
  }
  result.report.scalar_flops =
      std::accumulate(work.begin(), work.end(), int64_t{0});
  result.report.imbalance_ratio = Imbalance(work);
  return result;
}

absl::StatusOr<ShardedMatMul> ShardedMatMulFeature(const Tensor& a,
                                                   const Tensor& w, int parts,
                                                   FeatureShardDim shard_dim) {
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(a, "A"));
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(w, "W"));
  if (a.cols() != w.rows()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("matmul dimension mismatch: %s x %s", a.ShapeString(),
                        w.ShapeString()));
  }
  if (parts < 1) return absl::InvalidArgumentError("parts must be positive");
  const int64_t b = a.rows();
  const int64_t d = a.cols();
  const int64_t f = w.cols();
  const std::vector<Coord> ring = RowRing(parts);
  ShardedMatMul result;
  result.report.parts = parts;
  std::vector<int64_t> work(parts);

  if (shard_dim == FeatureShardDim::kOutput) {
    result.report.op = "matmul_f";
    const int64_t fp = PaddedLength(f, parts) / parts;
    std::vector<Payload> blocks(parts);
    for (int p = 0; p < parts; ++p) {
      Tensor wp({d, fp});
      for (int64_t k = 0; k < d; ++k) {
        for (int64_t j = 0; j < fp && p * fp + j < f; ++j) {
          wp.at(k, j) = w.at(k, p * fp + j);
        }
      }
      PODSCALE_ASSIGN_OR_RETURN(Tensor local, MatMul(a, wp));
      blocks[p].values = std::move(local.mutable_vector());
      work[p] = b * d * std::max<int64_t>(0, std::min(fp, f - p * fp));
    }
    PODSCALE_ASSIGN_OR_RETURN(
        GatherResult gathered,
        RingAllGather(ring, blocks, Direction::kBidirectional));
    const std::vector<float>& flat = gathered.payloads.front().values;
    Tensor out({b, f});
    for (int64_t j = 0; j < f; ++j) {
      const int64_t p = j / fp;
      for (int64_t i = 0; i < b; ++i) {
        out.at(i, j) = flat[p * b * fp + i * fp + (j - p * fp)];
      }
    }
    result.output = std::move(out);
    result.schedule = std::move(gathered.schedule);
    result.report.elements_moved = (parts - 1) * b * fp * parts;
  } else {
    result.report.op = "matmul_d";
    if (d < parts) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "cannot split contraction extent %d into %d parts", d, parts));
    }
    const std::vector<int64_t> offsets = SplitOffsets(d, parts);
    std::vector<Payload> partials(parts);
    for (int p = 0; p < parts; ++p) {
      const int64_t len = offsets[p + 1] - offsets[p];
      Tensor ap({b, len});
      Tensor wp({len, f});
      for (int64_t i = 0; i < b; ++i) {
        for (int64_t k = 0; k < len; ++k) ap.at(i, k) = a.at(i, offsets[p] + k);
      }
      std::copy_n(&w.values()[offsets[p] * f], len * f, wp.values().data());
      PODSCALE_ASSIGN_OR_RETURN(Tensor local, MatMul(ap, wp));
      partials[p].values = std::move(local.mutable_vector());
      work[p] = b * len * f;
    }
    PODSCALE_ASSIGN_OR_RETURN(
        GatherResult reduced,
        ModelParallelAllReduce(Tile{Coord{0, 0}, parts}, partials));
    result.output = Tensor({b, f}, reduced.payloads.front().values);
    result.schedule = std::move(reduced.schedule);
    // Reduce-scatter plus all-gather each move (p - 1) shards per device.
    result.report.elements_moved =
        parts > 1 ? 2 * (parts - 1) * PaddedLength(b * f, parts) : 0;
  }
  result.report.scalar_flops =
      std::accumulate(work.begin(), work.end(), int64_t{0});
  result.report.imbalance_ratio = Imbalance(work);
  return result;
}

absl::Status ShardSpec::Validate(std::span<const int64_t> shape,
                                 int devices) const {
  if (devices < 1)
    return absl::InvalidArgumentError("devices must be positive");
  if (!split_dim) return absl::OkStatus();
  if (*split_dim < 0 || *split_dim >= static_cast<int>(shape.size())) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "split dim %d out of range for rank %d", *split_dim, shape.size()));
  }
  if (parts < 1) return absl::InvalidArgumentError("split parts must be >= 1");
  if (devices % parts != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "split parts %d does not divide %d devices", parts, devices));
  }
  if (shape[*split_dim] < parts) {
    return absl::InvalidArgumentError(
        absl::StrFormat("dim %d of extent %d cannot be split %d ways",
                        *split_dim, shape[*split_dim], parts));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<Tensor>> ShardTensor(const Tensor& tensor,
                                                const ShardSpec& spec,
                                                int devices) {
  PODSCALE_RETURN_IF_ERROR(spec.Validate(tensor.shape(), devices));
  std::vector<Tensor> pieces;
  pieces.reserve(devices);
  if (!spec.split_dim) {
    pieces.assign(devices, tensor);
    return pieces;
  }
  const int dim = *spec.split_dim;
  const std::vector<int64_t>& shape = tensor.shape();
  // View the tensor as (outer, extent, inner) around the split dim.
  int64_t outer = 1;
  for (int i = 0; i < dim; ++i) outer *= shape[i];
  int64_t inner = 1;
  for (size_t i = dim + 1; i < shape.size(); ++i) inner *= shape[i];
  for (int g = 0; g < devices; ++g) {
    const auto [lo, hi] = HeldRange(spec, shape, g, devices);
    std::vector<int64_t> piece_shape = shape;
    piece_shape[dim] = hi - lo;
    Tensor piece(piece_shape);
    float* dst = piece.values().data();
    for (int64_t o = 0; o < outer; ++o) {
      const float* src = &tensor.values()[(o * shape[dim] + lo) * inner];
      dst = std::copy_n(src, (hi - lo) * inner, dst);
    }
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

absl::StatusOr<Tensor> AssembleTensor(std::span<const Tensor> pieces,
                                      std::span<const int64_t> shape,
                                      const ShardSpec& spec, int devices) {
  PODSCALE_RETURN_IF_ERROR(spec.Validate(shape, devices));
  if (static_cast<int>(pieces.size()) != devices) {
    return absl::InvalidArgumentError(
        absl::StrFormat("expected %d pieces, got %d", devices, pieces.size()));
  }
  const std::vector<int64_t> full(shape.begin(), shape.end());
  if (!spec.split_dim) {
    if (pieces.front().shape() != full) {
      return absl::InvalidArgumentError("replicated piece has the wrong shape");
    }
    return pieces.front();
  }
  const int dim = *spec.split_dim;
  int64_t outer = 1;
  for (int i = 0; i < dim; ++i) outer *= shape[i];
  int64_t inner = 1;
  for (size_t i = dim + 1; i < shape.size(); ++i) inner *= shape[i];
  Tensor out(full);
  const int per_part = devices / spec.parts;
  for (int part = 0; part < spec.parts; ++part) {
    const Tensor& piece = pieces[part * per_part];
    const auto [lo, hi] = HeldRange(spec, shape, part * per_part, devices);
    if (piece.num_elements() != outer * (hi - lo) * inner) {
      return absl::InvalidArgumentError(
          absl::StrCat("piece ", part, " has the wrong size"));
    }
    const float* src = piece.values().data();
    for (int64_t o = 0; o < outer; ++o) {
      std::copy_n(src + o * (hi - lo) * inner, (hi - lo) * inner,
                  &out.values()[(o * shape[dim] + lo) * inner]);
    }
  }
  return out;
}

absl::StatusOr<ReshardResult> Reshard(const Tensor& tensor,
                                      const ShardSpec& from,
                                      const ShardSpec& to, int devices) {
  PODSCALE_RETURN_IF_ERROR(from.Validate(tensor.shape(), devices));
  PODSCALE_RETURN_IF_ERROR(to.Validate(tensor.shape(), devices));
  ReshardResult result;
  result.report.op = "reshard";
  result.report.parts = devices;
  result.report.per_device_moved.assign(devices, 0);
  const std::vector<int64_t>& shape = tensor.shape();
  const std::vector<int64_t> strides = Strides(shape);
  const int64_t n = tensor.num_elements();
#pragma omp parallel for schedule(static) if (n * devices > 65536)
  for (int g = 0; g < devices; ++g) {
    std::vector<int64_t> index(shape.size());
    int64_t moved = 0;
    for (int64_t e = 0; e < n; ++e) {
      int64_t rest = e;
      for (size_t i = 0; i < shape.size(); ++i) {
        index[i] = rest / strides[i];
        rest %= strides[i];
      }
      if (Holds(to, shape, g, devices, index) &&
          !Holds(from, shape, g, devices, index)) {
        ++moved;
      }
    }
    result.report.per_device_moved[g] = moved;
  }
  for (int64_t moved : result.report.per_device_moved) {
    result.report.elements_moved += moved;
  }
  result.report.imbalance_ratio = Imbalance(result.report.per_device_moved);
  PODSCALE_ASSIGN_OR_RETURN(result.per_device,
                            ShardTensor(tensor, to, devices));
  return result;
}

absl::StatusOr<Tensor> GatherAsOneHotMatMul(const Tensor& table,
                                            std::span<const int64_t> indices) {
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(table, "table"));
  const int64_t n = table.rows();
  const int64_t m = static_cast<int64_t>(indices.size());
  Tensor onehot({m, n});
  for (int64_t i = 0; i < m; ++i) {
    if (indices[i] < 0 || indices[i] >= n) {
      return absl::OutOfRangeError(absl::StrFormat(
          "index %d at position %d outside [0, %d)", indices[i], i, n));
    }
    onehot.at(i, indices[i]) = 1.0f;
  }
  return MatMul(onehot, table);
}

absl::StatusOr<ScalarReassociation> ScalarReassociate(float s, const Tensor& a,
                                                      const Tensor& b,
                                                      ScalarSide hint) {
  if (!std::isfinite(s)) {
    return absl::InvalidArgumentError("scalar must be finite");
  }
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(a, "A"));
  PODSCALE_RETURN_IF_ERROR(CheckMatrix(b, "B"));
  ScalarReassociation result;
  result.applied_to = hint;
  if (hint == ScalarSide::kAuto) {
    result.applied_to = a.num_elements() <= b.num_elements()
                            ? ScalarSide::kLeft
                            : ScalarSide::kRight;
  }
  Tensor scaled = result.applied_to == ScalarSide::kLeft ? a : b;
  for (float& v : scaled.values()) v *= s;
  result.scalar_multiplies = scaled.num_elements();
  if (result.applied_to == ScalarSide::kLeft) {
    PODSCALE_ASSIGN_OR_RETURN(result.output, MatMul(scaled, b));
  } else {
    PODSCALE_ASSIGN_OR_RETURN(result.output, MatMul(a, scaled));
  }
  return result;
}

absl::StatusOr<std::vector<Tensor>> DistributedBatchNorm(
    std::span<const Tensor> shards, float epsilon) {
  if (shards.empty()) return absl::InvalidArgumentError("empty device group");
  for (const Tensor& s : shards)
    PODSCALE_RETURN_IF_ERROR(CheckMatrix(s, "shard"));
  const int64_t features = shards.front().cols();
  int64_t total = 0;
  for (const Tensor& s : shards) {
    if (s.cols() != features) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "feature width mismatch: %d vs %d", s.cols(), features));
    }
    total += s.rows();
  }
  if (total == 0) return absl::InvalidArgumentError("zero total batch");

  const int group = static_cast<int>(shards.size());
  const std::vector<Coord> ring = RowRing(group);

  // Per-feature sums of f(x) on each device, carried as f32 payloads.
  auto local_sums = [&](auto f, int copies) {
    std::vector<Payload> sums(group);
    for (int g = 0; g < group; ++g) {
      std::vector<double> acc(copies * features, 0.0);
      for (int64_t i = 0; i < shards[g].rows(); ++i) {
        for (int64_t j = 0; j < features; ++j) {
          f(static_cast<double>(shards[g].at(i, j)), j, &acc);
        }
      }
      sums[g].values.assign(acc.begin(), acc.end());
    }
    return sums;
  };

  // Round one: a rough mean to center on.
  std::vector<Payload> first = local_sums(
      [](double x, int64_t j, std::vector<double>* acc) { (*acc)[j] += x; }, 1);
  PODSCALE_ASSIGN_OR_RETURN(GatherResult rough,
                            AllReduce(ring, first, ElemType::kF32));
  std::vector<double> center(features);
  for (int64_t j = 0; j < features; ++j) {
    center[j] = static_cast<double>(rough.payloads[0].values[j]) / total;
  }

  // Round two: sums of deviations from the center and of their squares.
  std::vector<Payload> second = local_sums(
      [&](double x, int64_t j, std::vector<double>* acc) {
        const double d = x - center[j];
        (*acc)[j] += d;
        (*acc)[features + j] += d * d;
      },
      2);
  PODSCALE_ASSIGN_OR_RETURN(GatherResult reduced,
                            AllReduce(ring, second, ElemType::kF32));

  std::vector<Tensor> out;
  out.reserve(group);
  for (int g = 0; g < group; ++g) {
    const std::vector<float>& stats = reduced.payloads[g].values;
    Tensor normalized({shards[g].rows(), features});
    for (int64_t j = 0; j < features; ++j) {
      const double shift = static_cast<double>(stats[j]) / total;
      const double mean = center[j] + shift;
      const double var =
          std::max(0.0, static_cast<double>(stats[features + j]) / total -
                            shift * shift);
      const double inv = 1.0 / std::sqrt(var + epsilon);
      for (int64_t i = 0; i < shards[g].rows(); ++i) {
        normalized.at(i, j) =
            static_cast<float>((shards[g].at(i, j) - mean) * inv);
      }
    }
    out.push_back(std::move(normalized));
  }
  return out;
}

absl::StatusOr<std::vector<TopKEntry>> DistributedTopK(
    std::span<const std::vector<float>> shards, int64_t k) {
  int64_t total = 0;
  for (const std::vector<float>& s : shards) {
    total += static_cast<int64_t>(s.size());
    for (float v : s) {
      if (std::isnan(v)) return absl::InvalidArgumentError("NaN score");
    }
  }
  if (k < 0 || k > total) {
    return absl::InvalidArgumentError(
        absl::StrFormat("k = %d outside [0, %d]", k, total));
  }
  auto before = [](const TopKEntry& a, const TopKEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.owner != b.owner) return a.owner < b.owner;
    return a.local_index < b.local_index;
  };
  std::vector<TopKEntry> candidates;
  for (int owner = 0; owner < static_cast<int>(shards.size()); ++owner) {
    std::vector<TopKEntry> local;
    local.reserve(shards[owner].size());
    for (size_t i = 0; i < shards[owner].size(); ++i) {
      local.push_back({shards[owner][i], owner, static_cast<int64_t>(i)});
    }
    const size_t keep = std::min<size_t>(k, local.size());
    std::partial_sort(local.begin(), local.begin() + keep, local.end(), before);
    candidates.insert(candidates.end(), local.begin(), local.begin() + keep);
  }
  std::sort(candidates.begin(), candidates.end(), before);
  candidates.resize(k);
  return candidates;
}

}  // namespace podscale

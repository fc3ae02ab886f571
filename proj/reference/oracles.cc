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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace podscale::reference {

float Bf16Round(float x) {
  if (std::isnan(x) || std::isinf(x)) return x;
  // Candidates: x truncated to bf16 and the next bf16 value away from zero.
  uint32_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  const uint32_t down_bits = bits & 0xffff0000u;
  const uint32_t up_bits = down_bits + 0x10000u;
  float down;
  float up;
  std::memcpy(&down, &down_bits, sizeof down);
  std::memcpy(&up, &up_bits, sizeof up);
  // Past the largest finite bf16 the next step is 2^128, which rounds to inf.
  const double up_value = std::isinf(up)
                              ? std::copysign(std::ldexp(1.0, 128), x)
                              : static_cast<double>(up);
  const double dd = std::fabs(static_cast<double>(x) - down);
  const double du = std::fabs(up_value - x);
  if (dd < du) return down;
  if (du < dd) return up;
  return ((down_bits >> 16) & 1u) == 0 ? down : up;
}

std::vector<float> FixedOrderSum(std::span<const std::vector<float>> payloads,
                                 bool bf16) {
  if (payloads.empty()) return {};
  auto round = [bf16](float v) { return bf16 ? Bf16Round(v) : v; };
  std::vector<float> acc(payloads[0].size());
  for (size_t i = 0; i < acc.size(); ++i) acc[i] = round(payloads[0][i]);
  for (size_t r = 1; r < payloads.size(); ++r) {
    for (size_t i = 0; i < acc.size(); ++i) {
      acc[i] = round(acc[i] + round(payloads[r][i]));
    }
  }
  return acc;
}

std::vector<float> HierarchicalOrderSum(
    const DeviceMesh& mesh, int stride, int peer,
    std::span<const std::vector<float>> payloads, bool bf16) {
  std::vector<std::vector<float>> columns;
  for (int x = peer; x < mesh.x_size(); x += stride) {
    std::vector<std::vector<float>> column;
    for (int y = 0; y < mesh.y_size(); ++y) {
      column.push_back(payloads[mesh.DeviceId(Coord{x, y})]);
    }
    columns.push_back(FixedOrderSum(column, bf16));
  }
  return FixedOrderSum(columns, bf16);
}

Tensor NestedLoopConv2D(const Tensor& image, const Tensor& kernel) {
  const int64_t h = image.rows();
  const int64_t w = image.cols();
  const int64_t k = kernel.rows();
  const int64_t r = k / 2;
  Tensor out({h, w});
  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      float acc = 0.0f;
      for (int64_t di = 0; di < k; ++di) {
        for (int64_t dj = 0; dj < k; ++dj) {
          const int64_t si = i + di - r;
          const int64_t sj = j + dj - r;
          if (si >= 0 && si < h && sj >= 0 && sj < w) {
            acc += image.at(si, sj) * kernel.at(di, dj);
          }
        }
      }
      out.at(i, j) = acc;
    }
  }
  return out;
}

Tensor DenseMatMul(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  for (int64_t i = 0; i < a.rows(); ++i) {
    for (int64_t j = 0; j < b.cols(); ++j) {
      float acc = 0.0f;
      for (int64_t k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b.at(k, j);
      out.at(i, j) = acc;
    }
  }
  return out;
}

Tensor BlockedMatMul(const Tensor& a, const Tensor& b, int parts) {
  const int64_t d = a.cols();
  const int64_t base = d / parts;
  Tensor out({a.rows(), b.cols()});
  for (int64_t i = 0; i < a.rows(); ++i) {
    for (int64_t j = 0; j < b.cols(); ++j) {
      float total = 0.0f;
      for (int p = 0; p < parts; ++p) {
        const int64_t lo = p * base;
        const int64_t hi = p + 1 == parts ? d : lo + base;
        float partial = 0.0f;
        for (int64_t k = lo; k < hi; ++k) partial += a.at(i, k) * b.at(k, j);
        total = p == 0 ? partial : total + partial;
      }
      out.at(i, j) = total;
    }
  }
  return out;
}

Tensor DirectGather(const Tensor& table, std::span<const int64_t> indices) {
  Tensor out({static_cast<int64_t>(indices.size()), table.cols()});
  for (size_t i = 0; i < indices.size(); ++i) {
    for (int64_t j = 0; j < table.cols(); ++j) {
      out.at(i, j) = table.at(indices[i], j);
    }
  }
  return out;
}

std::vector<double> ScaledProduct(float s, const Tensor& a, const Tensor& b) {
  std::vector<double> out(a.rows() * b.cols(), 0.0);
  for (int64_t i = 0; i < a.rows(); ++i) {
    for (int64_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (int64_t k = 0; k < a.cols(); ++k) {
        acc += static_cast<double>(a.at(i, k)) * b.at(k, j);
      }
      out[i * b.cols() + j] = static_cast<double>(s) * acc;
    }
  }
  return out;
}

namespace {

struct Held {
  int dim = -1;  // -1: everything
  int64_t lo = 0;
  int64_t hi = 0;
};

Held HeldBy(std::span<const int64_t> shape, const ShardSpec& spec, int devices,
            int g) {
  if (!spec.split_dim) return {};
  const int dim = *spec.split_dim;
  const int64_t base = shape[dim] / spec.parts;
  const int part = g * spec.parts / devices;
  Held h{dim, part * base, part * base + base};
  if (part == spec.parts - 1) h.hi = shape[dim];
  return h;
}

}  // namespace

int64_t ReshardTraffic(std::span<const int64_t> shape, const ShardSpec& from,
                       const ShardSpec& to, int devices, int g) {
  int64_t total = 1;
  for (int64_t e : shape) total *= e;
  const Held a = HeldBy(shape, to, devices, g);
  const Held b = HeldBy(shape, from, devices, g);
  auto fraction_count = [&](const Held& h) {
    return h.dim < 0 ? total : total / shape[h.dim] * (h.hi - h.lo);
  };
  const int64_t wanted = fraction_count(a);
  int64_t overlap;
  if (a.dim < 0) {
    overlap = fraction_count(b);
  } else if (b.dim < 0) {
    overlap = wanted;
  } else if (a.dim == b.dim) {
    const int64_t len =
        std::max<int64_t>(0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
    overlap = total / shape[a.dim] * len;
  } else {
    overlap =
        total / shape[a.dim] / shape[b.dim] * (a.hi - a.lo) * (b.hi - b.lo);
  }
  return wanted - overlap;
}

std::vector<Tensor> ConcatBatchNorm(std::span<const Tensor> shards,
                                    float epsilon) {
  const int64_t features = shards.front().cols();
  int64_t total = 0;
  for (const Tensor& s : shards) total += s.rows();
  std::vector<double> mean(features, 0.0);
  std::vector<double> var(features, 0.0);
  for (const Tensor& s : shards) {
    for (int64_t i = 0; i < s.rows(); ++i) {
      for (int64_t j = 0; j < features; ++j) mean[j] += s.at(i, j);
    }
  }
  for (double& m : mean) m /= total;
  for (const Tensor& s : shards) {
    for (int64_t i = 0; i < s.rows(); ++i) {
      for (int64_t j = 0; j < features; ++j) {
        const double d = s.at(i, j) - mean[j];
        var[j] += d * d;
      }
    }
  }
  for (double& v : var) v /= total;
  std::vector<Tensor> out;
  for (const Tensor& s : shards) {
    Tensor t({s.rows(), features});
    for (int64_t i = 0; i < s.rows(); ++i) {
      for (int64_t j = 0; j < features; ++j) {
        t.at(i, j) = static_cast<float>((s.at(i, j) - mean[j]) /
                                        std::sqrt(var[j] + epsilon));
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TopKEntry> FullSortTopK(std::span<const std::vector<float>> shards,
                                    int64_t k) {
  std::vector<TopKEntry> all;
  for (size_t o = 0; o < shards.size(); ++o) {
    for (size_t i = 0; i < shards[o].size(); ++i) {
      all.push_back(
          {shards[o][i], static_cast<int>(o), static_cast<int64_t>(i)});
    }
  }
  std::stable_sort(
      all.begin(), all.end(),
      [](const TopKEntry& a, const TopKEntry& b) { return a.value > b.value; });
  all.resize(k);
  return all;
}

double PairCount::Auc() const {
  return static_cast<double>(numerator) /
         (2.0 * static_cast<double>(positives) *
          static_cast<double>(negatives));
}

PairCount PairwiseAuc(std::span<const float> scores,
                      std::span<const int32_t> labels) {
  PairCount count;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      ++count.positives;
    } else {
      ++count.negatives;
    }
  }
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      if (scores[i] > scores[j]) {
        count.numerator += 2;
      } else if (scores[i] == scores[j]) {
        count.numerator += 1;
      }
    }
  }
  return count;
}

double CentralizedAccuracy(std::span<const EvalBatch> batches) {
  int64_t correct = 0;
  int64_t count = 0;
  for (const EvalBatch& b : batches) {
    for (int64_t i = 0; i < b.size(); ++i) {
      if (!b.valid[i]) continue;
      ++count;
      correct += b.predictions[i] == b.labels[i];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(count);
}

int64_t ExhaustivePlacementPeak(std::span<const EmbeddingTable> tables,
                                int devices, int64_t capacity) {
  const size_t n = tables.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return tables[a].bytes() > tables[b].bytes();
  });
  int64_t best = -1;
  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
    std::vector<int64_t> load(devices, 0);
    for (size_t t : order) {
      const EmbeddingTable& table = tables[t];
      if (mask >> t & 1) {
        for (int64_t& l : load) l += table.bytes();
        continue;
      }
      const int64_t parts = std::min<int64_t>(devices, table.rows);
      std::vector<int> by_load(devices);
      std::iota(by_load.begin(), by_load.end(), 0);
      std::stable_sort(by_load.begin(), by_load.end(),
                       [&](int a, int b) { return load[a] < load[b]; });
      for (int64_t i = 0; i < parts; ++i) {
        const int64_t rows =
            table.rows / parts + (i < table.rows % parts ? 1 : 0);
        load[by_load[i]] += rows * table.row_bytes;
      }
    }
    const int64_t peak = *std::max_element(load.begin(), load.end());
    if (peak <= capacity && (best < 0 || peak < best)) best = peak;
  }
  return best;
}

}  // namespace podscale::reference

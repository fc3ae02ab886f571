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

// Serial oracles. Each one computes its result directly from the definition,
// sharing no code path with the kernels it checks.

#ifndef PODSCALE_REFERENCE_ORACLES_H_
#define PODSCALE_REFERENCE_ORACLES_H_

#include <cstdint>
#include <span>
#include <vector>

#include "podscale/metrics.h"
#include "podscale/partitioner.h"
#include "podscale/sharding.h"
#include "podscale/tensor.h"
#include "podscale/topology.h"

namespace podscale::reference {

// Nearest bf16 value by comparing the two bf16 neighbours in double.
float Bf16Round(float x);

// ((p0 + p1) + p2) + ... elementwise. With bf16, inputs are rounded first
// and every partial sum is rounded after each addition.
std::vector<float> FixedOrderSum(std::span<const std::vector<float>> payloads,
                                 bool bf16 = false);

// Expected all-reduce result of the data-parallel group of `peer`: for each X
// position of the group, the column sum over ascending y, then those column
// sums folded over ascending X position. payloads are indexed by device id.
std::vector<float> HierarchicalOrderSum(
    const DeviceMesh& mesh, int stride, int peer,
    std::span<const std::vector<float>> payloads, bool bf16 = false);

Tensor NestedLoopConv2D(const Tensor& image, const Tensor& kernel);
Tensor DenseMatMul(const Tensor& a, const Tensor& b);
// Contraction split into `parts` (remainder to the last part); each part is
// an ascending-k dot, parts summed in ascending order.
Tensor BlockedMatMul(const Tensor& a, const Tensor& b, int parts);
Tensor DirectGather(const Tensor& table, std::span<const int64_t> indices);
// s * (A B), evaluated in double.
std::vector<double> ScaledProduct(float s, const Tensor& a, const Tensor& b);

// Elements device g must receive when moving from `from` to `to`, by
// interval arithmetic on the held index ranges.
int64_t ReshardTraffic(std::span<const int64_t> shape, const ShardSpec& from,
                       const ShardSpec& to, int devices, int g);

// Batch norm over the concatenated batch, two-pass in double.
std::vector<Tensor> ConcatBatchNorm(std::span<const Tensor> shards,
                                    float epsilon);

std::vector<TopKEntry> FullSortTopK(std::span<const std::vector<float>> shards,
                                    int64_t k);

// Numerator and denominator of the Mann-Whitney statistic by enumerating all
// (positive, negative) pairs: 2 per win, 1 per tie.
struct PairCount {
  uint64_t numerator = 0;
  int64_t positives = 0;
  int64_t negatives = 0;
  double Auc() const;
};
PairCount PairwiseAuc(std::span<const float> scores,
                      std::span<const int32_t> labels);

// Correct / count over valid entries of all batches together.
double CentralizedAccuracy(std::span<const EvalBatch> batches);

// Tries every replicate/partition choice (2^tables) and returns the lowest
// peak device load of any choice that fits, or -1 if none does. Tables are
// laid down largest first; a partitioned table splits its rows as evenly as
// possible over min(devices, rows) devices, larger parts on lighter devices.
int64_t ExhaustivePlacementPeak(std::span<const EmbeddingTable> tables,
                                int devices, int64_t capacity);

}  // namespace podscale::reference

#endif  // PODSCALE_REFERENCE_ORACLES_H_

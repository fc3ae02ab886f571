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

#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "oracles.h"
#include "podscale/collectives.h"
#include "podscale/metrics.h"
#include "podscale/netsim.h"
#include "podscale/partitioner.h"
#include "podscale/topology.h"

namespace podscale {
namespace {

std::vector<float> RandomValues(std::mt19937_64& rng, int64_t n) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

void BM_HierarchicalAllReduce(benchmark::State& state) {
  const int64_t n = state.range(0);
  const DeviceMesh mesh = *DeviceMesh::Create(8, 4, 1, true);
  std::mt19937_64 rng(1);
  std::vector<Payload> payloads(mesh.num_devices());
  for (Payload& p : payloads) p.values = RandomValues(rng, n);
  for (auto _ : state) {
    auto r = HierarchicalAllReduce2D(mesh, 1, payloads);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * n * mesh.num_devices());
}
BENCHMARK(BM_HierarchicalAllReduce)->Arg(1 << 10)->Arg(1 << 16);

void BM_SimulateMultipodSchedule(benchmark::State& state) {
  const DeviceMesh mesh = *BuildMultipod(4, 32, 32, true);
  const CollectiveSchedule schedule =
      *HierarchicalSchedule(mesh, 1, 25'557'032, ElemType::kF32);
  const LinkCostModel cost = LinkCostModel::Uniform(1e-6, 1.3e-11);
  for (auto _ : state) {
    auto r = SimulateSchedule(mesh, schedule, cost);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_SimulateMultipodSchedule);

void BM_SpatialConv(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Tensor image({256, 256}, RandomValues(rng, 256 * 256));
  const Tensor kernel({3, 3}, RandomValues(rng, 9));
  for (auto _ : state) {
    auto r = SpatialPartitionConv(image, kernel, state.range(0), 0);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_SpatialConv)->Arg(1)->Arg(8);

void BM_AucRoc(benchmark::State& state) {
  const int64_t n = state.range(0);
  std::mt19937_64 rng(3);
  std::vector<float> scores(n);
  std::vector<int32_t> labels(n);
  for (int64_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int32_t>(rng() & 1);
    scores[i] = static_cast<float>(rng() % 100000) * 1e-5f;
  }
  for (auto _ : state) {
    auto r = AucRoc(scores, labels);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_AucRoc)->Arg(1 << 16)->Arg(1 << 22);

void BM_PairwiseAucOracle(benchmark::State& state) {
  const int64_t n = state.range(0);
  std::mt19937_64 rng(4);
  std::vector<float> scores(n);
  std::vector<int32_t> labels(n);
  for (int64_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int32_t>(rng() & 1);
    scores[i] = static_cast<float>(rng() % 1000) * 1e-3f;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::PairwiseAuc(scores, labels));
  }
}
BENCHMARK(BM_PairwiseAucOracle)->Arg(2000);

}  // namespace
}  // namespace podscale

BENCHMARK_MAIN();

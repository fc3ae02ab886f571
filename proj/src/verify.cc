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

#include "podscale/verify.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "oracles.h"
#include "podscale/metrics.h"
#include "podscale/partitioner.h"
#include "podscale/sharding.h"
#include "podscale/status_macros.h"

namespace podscale {
namespace {

bool Same(float a, float b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

bool SameVector(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), Same);
}

bool SameTensor(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && SameVector(a.values(), b.values());
}

void Fail(CheckResult* r, const std::string& detail) {
  if (r->failures++ == 0) r->detail = detail;
}

void FailStatus(CheckResult* r, const absl::Status& status) {
  Fail(r, absl::StrCat("error: ", status.message()));
}

Tensor RandomMatrix(std::mt19937_64& rng, int64_t rows, int64_t cols,
                    float lo = -1.0f, float hi = 1.0f) {
  Tensor t({rows, cols});
  for (float& v : t.values()) v = RandomFloat(rng, lo, hi);
  return t;
}

std::vector<float> RandomVector(std::mt19937_64& rng, int64_t n, float lo,
                                float hi) {
  std::vector<float> v(n);
  for (float& x : v) x = RandomFloat(rng, lo, hi);
  return v;
}

ParamLayout RandomLayout(std::mt19937_64& rng, int64_t n) {
  ParamLayout layout;
  int64_t left = n;
  while (left > 0) {
    const int64_t len = std::min(left, RandomInt(rng, 1, 40));
    layout.row_lengths.push_back(len);
    left -= len;
  }
  return layout;
}

}  // namespace

std::string CheckResultsCsv(std::span<const CheckResult> results) {
  std::string out = "suite,instances,failures,status,detail\n";
  for (const CheckResult& r : results) {
    std::string detail = r.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    absl::StrAppendFormat(&out, "%s,%d,%d,%s,%s\n", r.suite, r.instances,
                          r.failures, r.passed() ? "PASS" : "FAIL", detail);
  }
  return out;
}

float RandomFloat(std::mt19937_64& rng, float lo, float hi) {
  const double unit = static_cast<double>(rng() >> 40) / 16777216.0;
  return static_cast<float>(lo + (hi - lo) * unit);
}

int64_t RandomInt(std::mt19937_64& rng, int64_t lo, int64_t hi) {
  return lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(hi - lo + 1));
}

CheckResult CheckHierarchicalAllReduce(const DeviceMesh& mesh, int stride,
                                       std::span<const int64_t> sizes,
                                       ElemType elem_type,
                                       std::mt19937_64& rng) {
  CheckResult r;
  r.suite = absl::StrFormat("collectives.hierarchical_%s_%dx%d_s%d",
                            ElemTypeName(elem_type), mesh.x_size(),
                            mesh.y_size(), stride);
  const bool bf16 = elem_type == ElemType::kBF16;
  for (int64_t n : sizes) {
    ++r.instances;
    std::vector<std::vector<float>> raw(mesh.num_devices());
    std::vector<Payload> payloads(mesh.num_devices());
    for (int64_t id = 0; id < mesh.num_devices(); ++id) {
      raw[id] = RandomVector(rng, n, -100.0f, 100.0f);
      payloads[id].values = raw[id];
    }
    HierarchicalOptions options;
    options.elem_type = elem_type;
    absl::StatusOr<GatherResult> got =
        HierarchicalAllReduce2D(mesh, stride, payloads, options);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    std::vector<std::vector<float>> want(stride);
    for (int o = 0; o < stride; ++o) {
      want[o] = reference::HierarchicalOrderSum(mesh, stride, o, raw, bf16);
    }
    for (int64_t id = 0; id < mesh.num_devices(); ++id) {
      const int peer = mesh.CoordOf(id).x % stride;
      if (!SameVector(got->payloads[id].values, want[peer])) {
        Fail(&r, absl::StrFormat("N=%d: device %s differs from the oracle", n,
                                 mesh.CoordOf(id).ToString()));
        break;
      }
    }
  }
  return r;
}

CheckResult CheckShardedUpdate(const DeviceMesh& mesh, int stride,
                               const OptimizerSpec& spec, int instances,
                               int steps, std::mt19937_64& rng) {
  CheckResult r;
  r.suite =
      absl::StrFormat("sharding.%s_%dx%d_s%d", OptimizerKindName(spec.kind),
                      mesh.x_size(), mesh.y_size(), stride);
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    std::vector<ParamLayout> layouts(stride);
    std::vector<std::vector<float>> weights(stride);
    for (int o = 0; o < stride; ++o) {
      const int64_t n = RandomInt(rng, 1, 257);
      layouts[o] = RandomLayout(rng, n);
      weights[o] = RandomVector(rng, n, -1.0f, 1.0f);
    }
    absl::StatusOr<ShardedOptimizer> sharded =
        ShardedOptimizer::Create(mesh, stride, spec, layouts);
    if (!spec.IsShardLocal()) {
      if (sharded.ok()) Fail(&r, "non-shard-local optimizer was accepted");
      continue;
    }
    if (!sharded.ok()) {
      FailStatus(&r, sharded.status());
      continue;
    }
    std::vector<std::vector<float>> reference_weights = weights;
    std::vector<OptimizerState> states(stride);
    for (int step = 0; step < steps; ++step) {
      std::vector<std::vector<float>> grads(mesh.num_devices());
      for (int64_t id = 0; id < mesh.num_devices(); ++id) {
        const int peer = mesh.CoordOf(id).x % stride;
        grads[id] = RandomVector(rng, weights[peer].size(), -1.0f, 1.0f);
      }
      absl::StatusOr<ShardedUpdateResult> got = sharded->Step(weights, grads);
      if (!got.ok()) {
        FailStatus(&r, got.status());
        break;
      }
      bool ok = true;
      for (int o = 0; o < stride && ok; ++o) {
        std::vector<std::vector<float>> group;
        for (int x = o; x < mesh.x_size(); x += stride) {
          for (int y = 0; y < mesh.y_size(); ++y) {
            group.push_back(grads[mesh.DeviceId(Coord{x, y})]);
          }
        }
        absl::StatusOr<std::vector<float>> want =
            ReplicatedUpdate(reference_weights[o], group, mesh.y_size(), spec,
                             layouts[o], &states[o]);
        if (!want.ok()) {
          FailStatus(&r, want.status());
          ok = false;
          break;
        }
        reference_weights[o] = *want;
        for (int x = o; x < mesh.x_size() && ok; x += stride) {
          for (int y = 0; y < mesh.y_size(); ++y) {
            const int64_t id = mesh.DeviceId(Coord{x, y});
            if (!SameVector(got->weights[id], *want)) {
              Fail(&r, absl::StrFormat("step %d: device %s differs", step,
                                       Coord{x, y}.ToString()));
              ok = false;
              break;
            }
          }
        }
      }
      if (!ok) break;
      for (int o = 0; o < stride; ++o) weights[o] = reference_weights[o];
    }
  }
  return r;
}

CheckResult CheckSpatialConv(int instances, std::mt19937_64& rng) {
  CheckResult r;
  r.suite = "partitioner.spatial_conv";
  constexpr int kParts[] = {1, 2, 4, 8};
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    const int parts = kParts[inst % 4];
    const int64_t k = 2 * RandomInt(rng, 0, 2) + 1;
    const int64_t hw = k / 2;
    const int split_dim = static_cast<int>(RandomInt(rng, 0, 1));
    const int64_t extent =
        parts * std::max<int64_t>(hw, 1) + RandomInt(rng, 0, 20);
    const int64_t cross = RandomInt(rng, 1, 24);
    const Tensor image = split_dim == 0 ? RandomMatrix(rng, extent, cross)
                                        : RandomMatrix(rng, cross, extent);
    const Tensor kernel = RandomMatrix(rng, k, k);
    absl::StatusOr<PartitionedConv> got =
        SpatialPartitionConv(image, kernel, parts, split_dim);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    if (!SameTensor(got->output, reference::NestedLoopConv2D(image, kernel))) {
      Fail(&r, absl::StrFormat("%s image, k=%d, parts=%d, dim=%d differs",
                               image.ShapeString(), k, parts, split_dim));
      continue;
    }
    // Halo volume law.
    if (got->report.elements_moved != 2 * hw * cross * (parts - 1)) {
      Fail(&r, absl::StrFormat("halo volume %d, expected %d",
                               got->report.elements_moved,
                               2 * hw * cross * (parts - 1)));
    }
  }
  return r;
}

CheckResult CheckShardedMatMul(int instances, std::mt19937_64& rng) {
  CheckResult r;
  r.suite = "partitioner.sharded_matmul";
  constexpr int kParts[] = {1, 2, 3, 4, 8};
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    const int parts = kParts[inst % 5];
    const bool contraction = (inst / 5) % 2 == 1;
    const int64_t b = RandomInt(rng, 1, 6);
    const int64_t d =
        contraction ? parts + RandomInt(rng, 0, 10) : RandomInt(rng, 1, 12);
    const int64_t f = RandomInt(rng, 1, 12);
    const Tensor a = RandomMatrix(rng, b, d);
    const Tensor w = RandomMatrix(rng, d, f);
    absl::StatusOr<ShardedMatMul> got = ShardedMatMulFeature(
        a, w, parts,
        contraction ? FeatureShardDim::kContraction : FeatureShardDim::kOutput);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    const Tensor want = contraction ? reference::BlockedMatMul(a, w, parts)
                                    : reference::DenseMatMul(a, w);
    if (!SameTensor(got->output, want)) {
      Fail(&r, absl::StrFormat("%s x %s, parts=%d, %s split differs",
                               a.ShapeString(), w.ShapeString(), parts,
                               contraction ? "d" : "f"));
    }
  }
  return r;
}

CheckResult CheckOneHotGather(int instances, std::mt19937_64& rng) {
  CheckResult r;
  r.suite = "partitioner.onehot_gather";
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    const int64_t n = RandomInt(rng, 1, 20);
    const Tensor table =
        RandomMatrix(rng, n, RandomInt(rng, 1, 8), -50.0f, 50.0f);
    std::vector<int64_t> indices(RandomInt(rng, 0, 30));
    for (int64_t& i : indices) i = RandomInt(rng, 0, n - 1);
    absl::StatusOr<Tensor> got = GatherAsOneHotMatMul(table, indices);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    if (!SameTensor(*got, reference::DirectGather(table, indices))) {
      Fail(&r, absl::StrFormat("gather of %d rows from %s differs",
                               indices.size(), table.ShapeString()));
    }
  }
  return r;
}

CheckResult CheckReshard(int instances, std::mt19937_64& rng) {
  CheckResult r;
  r.suite = "partitioner.reshard";
  constexpr int kDevices[] = {1, 2, 4, 8};
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    const int devices = kDevices[inst % 4];
    const int rank = static_cast<int>(RandomInt(rng, 1, 3));
    std::vector<int64_t> shape(rank);
    for (int64_t& e : shape) e = RandomInt(rng, 1, 6);
    auto random_spec = [&]() {
      const int dim = static_cast<int>(RandomInt(rng, 0, rank));
      if (dim == rank) return ShardSpec::Replicated();
      // Largest divisor of `devices` that the extent can take.
      int parts = devices;
      while (parts > shape[dim]) parts /= 2;
      parts = std::max(1, static_cast<int>(parts >> RandomInt(rng, 0, 1)));
      return ShardSpec::Split(dim, parts);
    };
    const ShardSpec from = random_spec();
    const ShardSpec to = random_spec();
    Tensor tensor(shape);
    for (float& v : tensor.values()) v = RandomFloat(rng, -10.0f, 10.0f);
    absl::StatusOr<ReshardResult> got = Reshard(tensor, from, to, devices);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    absl::StatusOr<Tensor> back =
        AssembleTensor(got->per_device, shape, to, devices);
    if (!back.ok() || !SameTensor(*back, tensor)) {
      Fail(&r, absl::StrFormat("%s does not reassemble", tensor.ShapeString()));
      continue;
    }
    for (int g = 0; g < devices; ++g) {
      const int64_t want =
          reference::ReshardTraffic(shape, from, to, devices, g);
      if (got->report.per_device_moved[g] != want) {
        Fail(&r, absl::StrFormat("%s device %d moved %d, expected %d",
                                 tensor.ShapeString(), g,
                                 got->report.per_device_moved[g], want));
        break;
      }
    }
  }
  return r;
}

CheckResult CheckTopK(int instances, std::mt19937_64& rng) {
  CheckResult r;
  r.suite = "partitioner.distributed_top_k";
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    std::vector<std::vector<float>> shards(RandomInt(rng, 1, 6));
    int64_t total = 0;
    for (auto& s : shards) {
      s.resize(RandomInt(rng, 0, 15));
      // Few distinct values so ties are common.
      for (float& v : s) v = static_cast<float>(RandomInt(rng, -4, 4));
      total += static_cast<int64_t>(s.size());
    }
    const int64_t k = RandomInt(rng, 0, total);
    absl::StatusOr<std::vector<TopKEntry>> got = DistributedTopK(shards, k);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    if (*got != reference::FullSortTopK(shards, k)) {
      Fail(&r,
           absl::StrFormat("k=%d over %d devices differs", k, shards.size()));
    }
  }
  return r;
}

CheckResult CheckBatchNorm(int instances, std::mt19937_64& rng) {
  CheckResult r;
  r.suite = "partitioner.batch_norm";
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    const int group = static_cast<int>(RandomInt(rng, 1, 8));
    const int64_t features = RandomInt(rng, 1, 5);
    std::vector<Tensor> shards;
    int64_t total = 0;
    for (int g = 0; g < group; ++g) {
      int64_t rows = RandomInt(rng, 0, 6);
      if (g == group - 1 && total == 0) rows = std::max<int64_t>(rows, 1);
      total += rows;
      shards.push_back(RandomMatrix(rng, rows, features, -3.0f, 3.0f));
    }
    absl::StatusOr<std::vector<Tensor>> got = DistributedBatchNorm(shards);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    const std::vector<Tensor> want = reference::ConcatBatchNorm(shards, 1e-5f);
    double worst = 0.0;
    for (int g = 0; g < group; ++g) {
      for (int64_t i = 0; i < want[g].num_elements(); ++i) {
        const double b = want[g].values()[i];
        const double err =
            std::fabs((*got)[g].values()[i] - b) / std::max(1.0, std::fabs(b));
        worst = std::max(worst, err);
      }
    }
    if (!(worst <= 1e-5)) {
      Fail(&r,
           absl::StrFormat("group of %d: error %g exceeds 1e-5", group, worst));
    }
  }
  return r;
}

CheckResult CheckScalarReassociate(int instances, std::mt19937_64& rng) {
  CheckResult r;
  r.suite = "partitioner.scalar_reassociate";
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    const int64_t m = RandomInt(rng, 1, 8);
    const int64_t k = RandomInt(rng, 1, 8);
    const int64_t n = RandomInt(rng, 1, 8);
    const Tensor a = RandomMatrix(rng, m, k);
    const Tensor b = RandomMatrix(rng, k, n);
    const float s = RandomFloat(rng, -4.0f, 4.0f);
    absl::StatusOr<ScalarReassociation> got = ScalarReassociate(s, a, b);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    if (got->scalar_multiplies > std::min(m * k, k * n)) {
      Fail(&r, absl::StrFormat("%d scalar multiplies exceeds min(%d, %d)",
                               got->scalar_multiplies, m * k, k * n));
      continue;
    }
    const std::vector<double> want = reference::ScaledProduct(s, a, b);
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t j = 0; j < n; ++j) {
        double scale = 0.0;
        for (int64_t t = 0; t < k; ++t) {
          scale += std::fabs(static_cast<double>(s) * a.at(i, t) * b.at(t, j));
        }
        const double err = std::fabs(got->output.at(i, j) - want[i * n + j]);
        if (err > 1e-6 * scale) {
          Fail(&r, absl::StrFormat("(%d,%d): error %g over term scale %g", i, j,
                                   err, scale));
          i = m;
          break;
        }
      }
    }
  }
  return r;
}

CheckResult CheckAuc(int instances, int64_t max_samples, std::mt19937_64& rng) {
  CheckResult r;
  r.suite = "metrics.auc";
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    const int64_t n = RandomInt(rng, 2, max_samples);
    const int64_t levels = std::max<int64_t>(1, n / 4);
    std::vector<float> scores(n);
    std::vector<int32_t> labels(n);
    for (int64_t i = 0; i < n; ++i) {
      const int64_t level = RandomInt(rng, 0, levels - 1);
      scores[i] = static_cast<float>(level - levels / 2) / 8.0f;
      if (scores[i] == 0.0f && RandomInt(rng, 0, 1) == 1) scores[i] = -0.0f;
      labels[i] = static_cast<int32_t>(RandomInt(rng, 0, 1));
    }
    if (std::all_of(labels.begin(), labels.end(),
                    [&](int32_t l) { return l == labels[0]; })) {
      labels[RandomInt(rng, 0, n - 1)] ^= 1;
    }
    std::vector<float> sorted = scores;
    for (float& v : sorted) v += 0.0f;  // -0 -> +0
    std::sort(sorted.begin(), sorted.end());
    int64_t tied = 0;
    for (int64_t i = 0; i < n; ++i) {
      const bool left = i > 0 && sorted[i - 1] == sorted[i];
      const bool right = i + 1 < n && sorted[i + 1] == sorted[i];
      tied += left || right;
    }
    if (10 * tied < 3 * n) {
      Fail(&r, absl::StrFormat("generator produced only %d/%d tied samples",
                               tied, n));
      continue;
    }
    absl::StatusOr<double> got = AucRoc(scores, labels);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    const double want = reference::PairwiseAuc(scores, labels).Auc();
    if (*got != want) {
      Fail(&r, absl::StrFormat("n=%d: %.17g vs pairwise %.17g", n, *got, want));
    }
  }
  return r;
}

CheckResult CheckAccuracy(int instances, std::mt19937_64& rng) {
  CheckResult r;
  r.suite = "metrics.distributed_accuracy";
  for (int inst = 0; inst < instances; ++inst) {
    ++r.instances;
    const int devices = static_cast<int>(RandomInt(rng, 1, 16));
    absl::StatusOr<PaddingLayout> layout =
        PadEvalDataset(RandomInt(rng, 1, 500), devices, RandomInt(rng, 1, 16));
    if (!layout.ok()) {
      FailStatus(&r, layout.status());
      continue;
    }
    std::vector<EvalBatch> batches = MakeSkeleton(*layout);
    for (EvalBatch& b : batches) {
      b.predictions.resize(b.size());
      for (int64_t i = 0; i < b.size(); ++i) {
        b.labels[i] = static_cast<int32_t>(RandomInt(rng, 0, 9));
        // Dummies look correct; the mask must still exclude them.
        b.predictions[i] = !b.valid[i] || RandomInt(rng, 0, 2) > 0
                               ? b.labels[i]
                               : static_cast<int32_t>(RandomInt(rng, 0, 9));
      }
    }
    absl::StatusOr<double> got = DistributedAccuracy(batches);
    if (!got.ok()) {
      FailStatus(&r, got.status());
      continue;
    }
    const double want = reference::CentralizedAccuracy(batches);
    if (*got != want) {
      Fail(&r, absl::StrFormat("%d devices: %.17g vs centralized %.17g",
                               devices, *got, want));
    }
  }
  return r;
}

absl::StatusOr<std::vector<CheckResult>> RunVerifySuites(
    const Scenario& scenario, uint64_t seed) {
  PODSCALE_ASSIGN_OR_RETURN(DeviceMesh mesh, scenario.mesh.Build());
  std::mt19937_64 rng(seed);
  const int n = scenario.verify.instances;
  std::vector<CheckResult> results;
  results.push_back(CheckHierarchicalAllReduce(mesh, scenario.stride,
                                               scenario.verify.payload_sizes,
                                               ElemType::kF32, rng));
  results.push_back(CheckHierarchicalAllReduce(mesh, scenario.stride,
                                               scenario.verify.payload_sizes,
                                               ElemType::kBF16, rng));
  results.push_back(CheckShardedUpdate(mesh, scenario.stride,
                                       scenario.optimizer.spec, n, 2, rng));
  results.push_back(CheckSpatialConv(n, rng));
  results.push_back(CheckShardedMatMul(n, rng));
  results.push_back(CheckOneHotGather(n, rng));
  results.push_back(CheckReshard(n, rng));
  results.push_back(CheckTopK(n, rng));
  results.push_back(CheckBatchNorm(n, rng));
  results.push_back(CheckScalarReassociate(n, rng));
  results.push_back(CheckAuc(n, scenario.verify.auc_samples, rng));
  results.push_back(CheckAccuracy(n, rng));
  return results;
}

}  // namespace podscale

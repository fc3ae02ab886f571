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

// Randomized oracle-equivalence checks. Each check draws `instances` random
// problems, runs the distributed kernel and compares it with the serial
// oracle: bitwise where the reduction order is fixed, otherwise within the
// tolerance named in the check.

#ifndef PODSCALE_VERIFY_H_
#define PODSCALE_VERIFY_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "podscale/scenario.h"

namespace podscale {

struct CheckResult {
  std::string suite;
  int64_t instances = 0;
  int64_t failures = 0;
  // First failure, or a short note.
  std::string detail;

  bool passed() const { return failures == 0; }
};

// Header: suite,instances,failures,status,detail
std::string CheckResultsCsv(std::span<const CheckResult> results);

// Uniform float in [lo, hi) on a 2^-24 grid.
float RandomFloat(std::mt19937_64& rng, float lo, float hi);
int64_t RandomInt(std::mt19937_64& rng, int64_t lo, int64_t hi);  // [lo, hi]

CheckResult CheckHierarchicalAllReduce(const DeviceMesh& mesh, int stride,
                                       std::span<const int64_t> sizes,
                                       ElemType elem_type,
                                       std::mt19937_64& rng);
// `steps` consecutive stateful updates per instance, with weight sizes drawn
// from [1, 257].
CheckResult CheckShardedUpdate(const DeviceMesh& mesh, int stride,
                               const OptimizerSpec& spec, int instances,
                               int steps, std::mt19937_64& rng);
CheckResult CheckSpatialConv(int instances, std::mt19937_64& rng);
CheckResult CheckShardedMatMul(int instances, std::mt19937_64& rng);
CheckResult CheckOneHotGather(int instances, std::mt19937_64& rng);
CheckResult CheckReshard(int instances, std::mt19937_64& rng);
CheckResult CheckTopK(int instances, std::mt19937_64& rng);
// |got - want| <= 1e-5 * max(1, |want|).
CheckResult CheckBatchNorm(int instances, std::mt19937_64& rng);
// |got - want| <= 1e-6 * sum_k |s a_ik b_kj|, plus flop dominance.
CheckResult CheckScalarReassociate(int instances, std::mt19937_64& rng);
// Sample counts in [2, max_samples], at least 30% of them tied.
CheckResult CheckAuc(int instances, int64_t max_samples, std::mt19937_64& rng);
CheckResult CheckAccuracy(int instances, std::mt19937_64& rng);

// Every suite at the sizes in the scenario's verify block.
absl::StatusOr<std::vector<CheckResult>> RunVerifySuites(
    const Scenario& scenario, uint64_t seed);

}  // namespace podscale

#endif  // PODSCALE_VERIFY_H_

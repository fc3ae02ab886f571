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

// Scenario files: JSON (comments allowed) with a strict schema. Every key
// except "mesh" is optional and falls back to the defaults below; unknown
// keys are errors reported with their dotted path.

#ifndef PODSCALE_SCENARIO_H_
#define PODSCALE_SCENARIO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "podscale/bf16.h"
#include "podscale/collectives.h"
#include "podscale/netsim.h"
#include "podscale/sharding.h"
#include "podscale/topology.h"

namespace podscale {

struct MeshConfig {
  int pods = 1;
  int pod_x = 32;
  int pod_y = 32;
  bool y_torus = true;
  bool x_torus = false;
  int devices_per_host = 8;
  bool allow_tile_straddle = false;

  absl::StatusOr<DeviceMesh> Build() const;
  friend bool operator==(const MeshConfig&, const MeshConfig&) = default;
};

struct PayloadConfig {
  int64_t elements = 1 << 20;
  ElemType elem_type = ElemType::kF32;
  Direction y_direction = Direction::kBidirectional;
  Direction x_direction = Direction::kBidirectional;
  friend bool operator==(const PayloadConfig&, const PayloadConfig&) = default;
};

// Optimizer math plus its cost model: flops_per_param per weight per step,
// measured as a fraction of the step at `cost_chips`.
struct OptimizerConfig {
  OptimizerSpec spec;
  double flops_per_param = 0.0;
  int64_t cost_chips = 0;
  friend bool operator==(const OptimizerConfig&,
                         const OptimizerConfig&) = default;
};

// Band the simulated all-reduce fraction at `chips` must fall in. chips = 0
// disables the check.
struct CalibrationConfig {
  int64_t chips = 0;
  double target_fraction = 0.0;
  double tolerance = 0.05;
  friend bool operator==(const CalibrationConfig&,
                         const CalibrationConfig&) = default;
};

struct PlacementConfig {
  int devices = 8;
  int64_t capacity_bytes = int64_t{16} << 30;
  // Negative selects capacity / 16.
  int64_t threshold_bytes = -1;
  std::vector<EmbeddingTable> tables;
  friend bool operator==(const PlacementConfig&,
                         const PlacementConfig&) = default;
};

struct ShuffleConfig {
  int files = 10;
  int64_t examples_per_file = 100;
  std::vector<int64_t> buffer_sizes = {2, 1000};
  int epochs = 2;
  int runs = 100;
  int64_t batch_size = 50;
  friend bool operator==(const ShuffleConfig&, const ShuffleConfig&) = default;
};

struct MetricsConfig {
  int64_t eval_examples = 10000;
  int devices = 8;
  int64_t per_device_batch = 64;
  int steps_per_transfer = 4;
  int64_t auc_samples = 1000000;
  // Distinct score levels in the synthetic AUC data; small values force ties.
  int64_t score_levels = 1000;
  friend bool operator==(const MetricsConfig&, const MetricsConfig&) = default;
};

struct VerifyConfig {
  std::vector<int64_t> payload_sizes = {1, 7, 64, 1000};
  int instances = 20;
  int64_t auc_samples = 500;
  friend bool operator==(const VerifyConfig&, const VerifyConfig&) = default;
};

struct Scenario {
  std::string name = "unnamed";
  MeshConfig mesh;
  int stride = 1;
  PayloadConfig payload;
  LinkCostModel cost = LinkCostModel::Uniform(1e-6, 1e-10);
  ComputeModel compute;
  OptimizerConfig optimizer;
  EpochTable epochs;
  std::vector<SweepPoint> sweep;
  CalibrationConfig calibration;
  PlacementConfig placement;
  ShuffleConfig shuffle;
  MetricsConfig metrics;
  VerifyConfig verify;

  ScalingScenario ToScaling() const;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Parses and validates. Errors name the offending key path, e.g.
// "unknown key: mesh.podz" or "stride: 3 does not divide mesh x extent 8".
absl::StatusOr<Scenario> ParseScenario(absl::string_view text);
absl::StatusOr<Scenario> LoadScenario(const std::string& path);

// Canonical JSON with every field present; parses back to an equal Scenario.
std::string SerializeScenario(const Scenario& scenario);

// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string ScenarioHash(const Scenario& scenario);

}  // namespace podscale

#endif  // PODSCALE_SCENARIO_H_

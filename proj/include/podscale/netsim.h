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

// Alpha-beta cost simulation of collective schedules and step-time sweeps.
//
// Phases run back to back; within a phase every ring advances in lockstep, so
// a phase costs steps * (alpha_eff + bytes_per_step * beta_eff) on its slowest
// ring. For a ring, alpha_eff is the worst per-hop latency between consecutive
// members and beta_eff the worst per-byte cost of a consecutive pair, where a
// pair k links apart pays k betas but one alpha. A ring whose ends are not
// adjacent (a line without wrap links) is embedded either in the given order or
// folded (0, 2, 4, ..., 5, 3, 1), whichever is cheaper. Link sharing between
// concurrent rings is not modeled.

#ifndef PODSCALE_NETSIM_H_
#define PODSCALE_NETSIM_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "podscale/collectives.h"
#include "podscale/topology.h"

namespace podscale {

struct LinkCostModel {
  // Seconds per message and seconds per byte, indexed by LinkClass.
  std::array<double, kNumLinkClasses> alpha{};
  std::array<double, kNumLinkClasses> beta{};

  static LinkCostModel Uniform(double alpha, double beta);

  double alpha_of(LinkClass link) const {
    return alpha[static_cast<int>(link)];
  }
  double beta_of(LinkClass link) const { return beta[static_cast<int>(link)]; }

  absl::Status Validate() const;
  friend bool operator==(const LinkCostModel&, const LinkCostModel&) = default;
};

struct PhaseTiming {
  int index = 0;
  PhaseKind kind = PhaseKind::kLocalUpdate;
  int steps = 0;
  double alpha_eff = 0.0;
  double beta_eff = 0.0;
  double bytes_per_step = 0.0;
  double start = 0.0;
  double end = 0.0;
};

struct SimulationResult {
  double seconds = 0.0;
  std::vector<PhaseTiming> timeline;
};

absl::StatusOr<SimulationResult> SimulateSchedule(
    const DeviceMesh& mesh, const CollectiveSchedule& schedule,
    const LinkCostModel& cost);

// Closed-form ring all-reduce time on a uniform ring:
//   2(p-1) alpha + 2(p-1)/p N beta, with the beta term halved when
//   bidirectional. Evaluated as two halves of (p-1)(alpha + N/p beta), one
//   per ring pass.
double AnalyticRingTime(int p, double n_bytes, double alpha, double beta,
                        Direction direction);

struct ComputeModel {
  // Work per training example; a step performs batch * work_per_example
  // spread evenly over the replicas.
  double work_per_example = 0.0;
  double flops_rate = 1.0;
  double fixed_overhead = 0.0;

  double StepSeconds(int64_t batch, int64_t chips) const;
  absl::Status Validate() const;
  friend bool operator==(const ComputeModel&, const ComputeModel&) = default;
};

struct StepBreakdown {
  int64_t chips = 0;
  int64_t batch = 0;
  double compute_time = 0.0;
  double allreduce_time = 0.0;
  // Epoch budget at this batch; 1 when the scenario has no epoch table.
  double epochs = 1.0;
  double throughput_speedup = 1.0;
  double e2e_speedup = 1.0;

  double step_time() const { return compute_time + allreduce_time; }
  double allreduce_fraction() const {
    const double step = step_time();
    return step > 0.0 ? allreduce_time / step : 0.0;
  }
};

// Epochs needed to converge at a given global batch.
class EpochTable {
 public:
  EpochTable() = default;
  explicit EpochTable(std::map<int64_t, double> epochs)
      : epochs_(std::move(epochs)) {}

  absl::StatusOr<double> EpochsFor(int64_t batch) const;
  bool empty() const { return epochs_.empty(); }
  const std::map<int64_t, double>& entries() const { return epochs_; }
  friend bool operator==(const EpochTable&, const EpochTable&) = default;

 private:
  std::map<int64_t, double> epochs_;
};

// Time-to-train speedup of (batch, step, epochs) over a baseline:
// throughput speedup times baseline_epochs / epochs.
double EndToEndSpeedup(int64_t base_batch, double base_step, double base_epochs,
                       int64_t batch, double step, double epochs);

struct SweepPoint {
  int64_t chips = 1;
  int64_t batch = 1;
  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

struct ScalingScenario {
  int pod_x = 32;
  int pod_y = 32;
  int stride = 1;
  int64_t payload_elements = 0;
  ElemType elem_type = ElemType::kF32;
  Direction y_direction = Direction::kBidirectional;
  Direction x_direction = Direction::kBidirectional;
  LinkCostModel cost;
  ComputeModel compute;
  EpochTable epochs;
  std::vector<SweepPoint> points;
};

// Slice shape used for a chip count: whole pods concatenated along X when
// chips is a multiple of the pod size, otherwise a sub-pod slice whose Y
// extent is the smallest power of two >= sqrt(chips) (capped at pod_y). The Y
// wrap links exist only when the slice spans the full pod height.
absl::StatusOr<DeviceMesh> MeshForChips(int64_t chips, int pod_x, int pod_y);

// One breakdown per sweep point, in input order. Speedups are relative to
// the first point.
absl::StatusOr<std::vector<StepBreakdown>> SweepScaling(
    const ScalingScenario& scenario);

// Header: chips,batch,epochs,compute_s,allreduce_s,step_s,allreduce_fraction,
// throughput_speedup,e2e_speedup
std::string BreakdownCsv(const std::vector<StepBreakdown>& rows);

// Throughput = batch / step_time. Fills throughput_speedup and e2e_speedup
// of every row relative to `base`.
void ApplySpeedups(const StepBreakdown& base, std::vector<StepBreakdown>& rows);

}  // namespace podscale

#endif  // PODSCALE_NETSIM_H_

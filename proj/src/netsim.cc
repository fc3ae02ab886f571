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

#include "podscale/netsim.h"

#include <algorithm>
#include <bit>
#include <cmath>

#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "podscale/status_macros.h"

namespace podscale {
namespace {

struct HopCost {
  double alpha = 0.0;
  double beta = 0.0;
};

absl::StatusOr<HopCost> PairCost(const DeviceMesh& mesh, Coord a, Coord b,
                                 const LinkCostModel& cost) {
  PODSCALE_ASSIGN_OR_RETURN(std::vector<LinkClass> links,
                            RouteLinks(mesh, a, b));
  HopCost hop;
  for (LinkClass link : links) {
    hop.alpha = std::max(hop.alpha, cost.alpha_of(link));
    hop.beta += cost.beta_of(link);
  }
  return hop;
}

// Worst consecutive-pair costs of a closed ring visiting `order`.
absl::StatusOr<HopCost> RingCost(const DeviceMesh& mesh,
                                 const std::vector<Coord>& order,
                                 const LinkCostModel& cost) {
  HopCost worst;
  const size_t p = order.size();
  for (size_t i = 0; i < p; ++i) {
    PODSCALE_ASSIGN_OR_RETURN(
        HopCost hop, PairCost(mesh, order[i], order[(i + 1) % p], cost));
    worst.alpha = std::max(worst.alpha, hop.alpha);
    worst.beta = std::max(worst.beta, hop.beta);
  }
  return worst;
}

std::vector<Coord> Folded(const std::vector<Coord>& ring) {
  const int64_t n = static_cast<int64_t>(ring.size());
  std::vector<Coord> out;
  out.reserve(n);
  for (int64_t i = 0; i < n; i += 2) out.push_back(ring[i]);
  for (int64_t i = (n % 2 == 0) ? n - 1 : n - 2; i >= 1; i -= 2) {
    out.push_back(ring[i]);
  }
  return out;
}

}  // namespace

LinkCostModel LinkCostModel::Uniform(double alpha, double beta) {
  LinkCostModel m;
  m.alpha.fill(alpha);
  m.beta.fill(beta);
  return m;
}

absl::Status LinkCostModel::Validate() const {
  for (int i = 0; i < kNumLinkClasses; ++i) {
    const auto name = LinkClassName(static_cast<LinkClass>(i));
    if (!(alpha[i] >= 0.0) || !std::isfinite(alpha[i])) {
      return absl::InvalidArgumentError(
          absl::StrFormat("alpha.%s must be finite and >= 0", name));
    }
    if (!(beta[i] >= 0.0) || !std::isfinite(beta[i])) {
      return absl::InvalidArgumentError(
          absl::StrFormat("beta.%s must be finite and >= 0", name));
    }
  }
  if (alpha_of(LinkClass::kCrossPod) < alpha_of(LinkClass::kWithinPod)) {
    return absl::InvalidArgumentError(
        "alpha.cross_pod must be >= alpha.within_pod");
  }
  return absl::OkStatus();
}

absl::StatusOr<SimulationResult> SimulateSchedule(
    const DeviceMesh& mesh, const CollectiveSchedule& schedule,
    const LinkCostModel& cost) {
  PODSCALE_RETURN_IF_ERROR(cost.Validate());
  SimulationResult result;
  double clock = 0.0;
  for (size_t index = 0; index < schedule.phases().size(); ++index) {
    const Phase& phase = schedule.phases()[index];
    PhaseTiming timing;
    timing.index = static_cast<int>(index);
    timing.kind = phase.kind;
    timing.steps = phase.steps;
    timing.bytes_per_step = phase.bytes_per_step();
    for (const std::vector<Coord>& ring : phase.rings) {
      for (Coord c : ring) PODSCALE_RETURN_IF_ERROR(mesh.CheckContains(c));
    }
    double phase_time = 0.0;
    if (phase.steps > 0) {
      for (const std::vector<Coord>& ring : phase.rings) {
        if (ring.size() < 2) continue;
        PODSCALE_ASSIGN_OR_RETURN(HopCost natural, RingCost(mesh, ring, cost));
        PODSCALE_ASSIGN_OR_RETURN(HopCost folded,
                                  RingCost(mesh, Folded(ring), cost));
        const double natural_step =
            natural.alpha + timing.bytes_per_step * natural.beta;
        const double folded_step =
            folded.alpha + timing.bytes_per_step * folded.beta;
        const HopCost& best = folded_step < natural_step ? folded : natural;
        const double ring_time =
            phase.steps * (best.alpha + timing.bytes_per_step * best.beta);
        if (ring_time >= phase_time) {
          phase_time = ring_time;
          timing.alpha_eff = best.alpha;
          timing.beta_eff = best.beta;
        }
      }
    }
    timing.start = clock;
    clock = clock + phase_time;
    timing.end = clock;
    result.timeline.push_back(timing);
  }
  result.seconds = clock;
  return result;
}

double AnalyticRingTime(int p, double n_bytes, double alpha, double beta,
                        Direction direction) {
  if (p <= 1) return 0.0;
  double per_step = n_bytes / p;
  if (direction == Direction::kBidirectional) per_step /= 2.0;
  const double half = (p - 1) * (alpha + per_step * beta);
  return half + half;
}

double ComputeModel::StepSeconds(int64_t batch, int64_t chips) const {
  const double step_work = work_per_example * static_cast<double>(batch) /
                           static_cast<double>(chips);
  return step_work / flops_rate + fixed_overhead;
}

absl::Status ComputeModel::Validate() const {
  if (!(work_per_example >= 0.0) || !(fixed_overhead >= 0.0)) {
    return absl::InvalidArgumentError(
        "work_per_example and fixed_overhead must be >= 0");
  }
  if (!(flops_rate > 0.0)) {
    return absl::InvalidArgumentError("flops_rate must be > 0");
  }
  return absl::OkStatus();
}

absl::StatusOr<double> EpochTable::EpochsFor(int64_t batch) const {
  auto it = epochs_.find(batch);
  if (it == epochs_.end()) {
    std::vector<std::string> known;
    for (const auto& [b, e] : epochs_) {
      known.push_back(absl::StrFormat("%d->%g", b, e));
    }
    return absl::NotFoundError(
        absl::StrFormat("no epoch budget for batch %d; known entries: {%s}",
                        batch, absl::StrJoin(known, ", ")));
  }
  return it->second;
}

double EndToEndSpeedup(int64_t base_batch, double base_step, double base_epochs,
                       int64_t batch, double step, double epochs) {
  const double throughput = (static_cast<double>(batch) / step) /
                            (static_cast<double>(base_batch) / base_step);
  return throughput * (base_epochs / epochs);
}

absl::StatusOr<DeviceMesh> MeshForChips(int64_t chips, int pod_x, int pod_y) {
  const int64_t pod_chips = static_cast<int64_t>(pod_x) * pod_y;
  if (chips < 1) {
    return absl::InvalidArgumentError("chip count must be positive");
  }
  if (chips >= pod_chips) {
    if (chips % pod_chips != 0) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "%d chips is not a whole number of %dx%d pods", chips, pod_x, pod_y));
    }
    return BuildMultipod(static_cast<int>(chips / pod_chips), pod_x, pod_y,
                         /*y_torus=*/true);
  }
  const int log2_chips = std::bit_width(static_cast<uint64_t>(chips - 1));
  int64_t y = int64_t{1} << ((log2_chips + 1) / 2);
  y = std::min<int64_t>(y, pod_y);
  if (chips % y != 0 || chips / y > pod_x) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%d chips is not expressible as a slice of a %dx%d pod",
                        chips, pod_x, pod_y));
  }
  return DeviceMesh::Create(static_cast<int>(chips / y), static_cast<int>(y), 1,
                            /*y_torus=*/y == pod_y);
}

absl::StatusOr<std::vector<StepBreakdown>> SweepScaling(
    const ScalingScenario& scenario) {
  PODSCALE_RETURN_IF_ERROR(scenario.cost.Validate());
  PODSCALE_RETURN_IF_ERROR(scenario.compute.Validate());
  std::vector<StepBreakdown> rows;
  rows.reserve(scenario.points.size());
  for (const SweepPoint& point : scenario.points) {
    PODSCALE_ASSIGN_OR_RETURN(
        DeviceMesh mesh,
        MeshForChips(point.chips, scenario.pod_x, scenario.pod_y));
    PODSCALE_ASSIGN_OR_RETURN(
        CollectiveSchedule schedule,
        HierarchicalSchedule(mesh, scenario.stride, scenario.payload_elements,
                             scenario.elem_type, scenario.y_direction,
                             scenario.x_direction));
    PODSCALE_ASSIGN_OR_RETURN(SimulationResult sim,
                              SimulateSchedule(mesh, schedule, scenario.cost));
    StepBreakdown row;
    row.chips = point.chips;
    row.batch = point.batch;
    row.compute_time = scenario.compute.StepSeconds(point.batch, point.chips);
    row.allreduce_time = sim.seconds;
    rows.push_back(row);
  }
  for (StepBreakdown& row : rows) {
    if (!scenario.epochs.empty()) {
      PODSCALE_ASSIGN_OR_RETURN(row.epochs,
                                scenario.epochs.EpochsFor(row.batch));
    }
  }
  if (!rows.empty()) ApplySpeedups(StepBreakdown(rows.front()), rows);
  return rows;
}

void ApplySpeedups(const StepBreakdown& base,
                   std::vector<StepBreakdown>& rows) {
  for (StepBreakdown& row : rows) {
    row.throughput_speedup = EndToEndSpeedup(base.batch, base.step_time(), 1.0,
                                             row.batch, row.step_time(), 1.0);
    row.e2e_speedup = EndToEndSpeedup(base.batch, base.step_time(), base.epochs,
                                      row.batch, row.step_time(), row.epochs);
  }
}

std::string BreakdownCsv(const std::vector<StepBreakdown>& rows) {
  std::string out =
      "chips,batch,epochs,compute_s,allreduce_s,step_s,allreduce_fraction,"
      "throughput_speedup,e2e_speedup\n";
  for (const StepBreakdown& r : rows) {
    absl::StrAppendFormat(
        &out, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.chips,
        r.batch, r.epochs, r.compute_time, r.allreduce_time, r.step_time(),
        r.allreduce_fraction(), r.throughput_speedup, r.e2e_speedup);
  }
  return out;
}

}  // namespace podscale

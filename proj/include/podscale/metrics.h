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

// Distributed evaluation: padded eval datasets, globally summed accuracy,
// exact sort-based AUC, multi-step accumulation and round-robin assignment.

#ifndef PODSCALE_METRICS_H_
#define PODSCALE_METRICS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"

namespace podscale {

// One device's evaluation slice. `valid` is false for dummy padding. Either
// of predictions and scores may be empty when unused; non-empty vectors have
// the same length as labels.
struct EvalBatch {
  std::vector<float> scores;
  std::vector<int32_t> predictions;
  std::vector<int32_t> labels;
  std::vector<bool> valid;

  int64_t size() const { return static_cast<int64_t>(labels.size()); }
  absl::Status Validate() const;
};

// Device-major slot layout: device d owns slots [d * slots_per_device,
// (d + 1) * slots_per_device) and real examples fill slots in order.
struct PaddingLayout {
  int64_t n_examples = 0;
  int n_devices = 1;
  int64_t per_device_batch = 1;
  int64_t steps = 0;

  int64_t slots_per_device() const { return steps * per_device_batch; }
  int64_t total_slots() const { return slots_per_device() * n_devices; }
  int64_t n_dummy() const { return total_slots() - n_examples; }
  int64_t RealOnDevice(int device) const;
};

absl::StatusOr<PaddingLayout> PadEvalDataset(int64_t n_examples, int n_devices,
                                             int64_t per_device_batch);

// Per-device batches with masks set and zero labels.
std::vector<EvalBatch> MakeSkeleton(const PaddingLayout& layout);

// Order-preserving key of a non-NaN float; -0 and +0 share a key.
uint32_t ScoreKey(float score);

// Counts for accuracy and a per-score (positives, negatives) histogram for
// AUC. Merge is exact, associative and commutative.
struct MetricAccumulator {
  int64_t correct = 0;
  int64_t count = 0;
  std::map<uint32_t, std::pair<int64_t, int64_t>> score_counts;

  absl::Status Add(const EvalBatch& batch);
  void Merge(const MetricAccumulator& other);
  absl::StatusOr<double> Accuracy() const;
  absl::StatusOr<double> Auc() const;
  friend bool operator==(const MetricAccumulator&,
                         const MetricAccumulator&) = default;
};

// Sums each device's (correct, count) with a ring all-reduce. Counts travel
// as base-2^12 limbs so the f32 sums stay exact for up to 4096 devices.
absl::StatusOr<double> DistributedAccuracy(std::span<const EvalBatch> devices);

// Rank-based AUC with ties counted as half. Positives and negatives are
// radix sorted separately, then a single merge pass counts, for every
// positive, the negatives below it and tied with it.
absl::StatusOr<double> AucRoc(std::span<const float> scores,
                              std::span<const int32_t> labels);

// Accumulates `steps_per_transfer` batches on device before each merge into
// the host accumulator.
absl::StatusOr<MetricAccumulator> MultiStepEval(
    std::span<const EvalBatch> batches, int steps_per_transfer);

// Worker of each event: i mod workers.
absl::StatusOr<std::vector<int>> RoundRobinAssign(int64_t events, int workers);

struct MetricRecord {
  std::string metric;
  double value = 0.0;
  int64_t n_real = 0;
  int64_t n_dummy = 0;
  double wall_time = 0.0;
};

// Header: metric,value,n_real,n_dummy,wall_time
std::string MetricRecordsCsv(std::span<const MetricRecord> records);

}  // namespace podscale

#endif  // PODSCALE_METRICS_H_

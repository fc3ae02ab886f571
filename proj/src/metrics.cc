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

#include "podscale/metrics.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>

#include "absl/strings/str_format.h"
#include "podscale/collectives.h"
#include "podscale/status_macros.h"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace podscale {
namespace {

constexpr int kLimbBits = 12;
constexpr int kLimbs = (63 + kLimbBits - 1) / kLimbBits;
constexpr int kMaxLimbDevices = 1 << (24 - kLimbBits);

int NumThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// LSD radix sort on 8-bit digits. Each pass histograms per-thread chunks, so
// the scatter is stable and the result independent of the thread count.
void RadixSort(std::vector<uint32_t>& keys) {
  const int64_t n = static_cast<int64_t>(keys.size());
  if (n < 2) return;
  std::vector<uint32_t> scratch(n);
  const int threads = n > (1 << 16) ? NumThreads() : 1;
  std::vector<std::array<int64_t, 256>> counts(threads);
  for (int shift = 0; shift < 32; shift += 8) {
#pragma omp parallel num_threads(threads)
    {
#ifdef _OPENMP
      const int t = omp_get_thread_num();
#else
      const int t = 0;
#endif
      const int64_t lo = n * t / threads;
      const int64_t hi = n * (t + 1) / threads;
      std::array<int64_t, 256>& c = counts[t];
      c.fill(0);
      for (int64_t i = lo; i < hi; ++i) ++c[(keys[i] >> shift) & 0xff];
#pragma omp barrier
#pragma omp single
      {
        int64_t offset = 0;
        for (int digit = 0; digit < 256; ++digit) {
          for (int u = 0; u < threads; ++u) {
            const int64_t here = counts[u][digit];
            counts[u][digit] = offset;
            offset += here;
          }
        }
      }
      for (int64_t i = lo; i < hi; ++i) {
        scratch[c[(keys[i] >> shift) & 0xff]++] = keys[i];
      }
    }
    keys.swap(scratch);
  }
}

double AucFromNumerator(uint64_t numerator, int64_t positives,
                        int64_t negatives) {
  return static_cast<double>(numerator) /
         (2.0 * static_cast<double>(positives) *
          static_cast<double>(negatives));
}

std::vector<float> ToLimbs(int64_t value) {
  std::vector<float> limbs(kLimbs);
  for (int i = 0; i < kLimbs; ++i) {
    limbs[i] = static_cast<float>(value & ((1 << kLimbBits) - 1));
    value >>= kLimbBits;
  }
  return limbs;
}

int64_t FromLimbs(std::span<const float> limbs) {
  int64_t value = 0;
  for (int i = kLimbs - 1; i >= 0; --i) {
    value = (value << kLimbBits) + static_cast<int64_t>(limbs[i]);
  }
  return value;
}

}  // namespace

absl::Status EvalBatch::Validate() const {
  const size_t n = labels.size();
  if (valid.size() != n) {
    return absl::InvalidArgumentError(
        absl::StrFormat("mask has %d entries for %d labels", valid.size(), n));
  }
  if (!predictions.empty() && predictions.size() != n) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%d predictions for %d labels", predictions.size(), n));
  }
  if (!scores.empty() && scores.size() != n) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%d scores for %d labels", scores.size(), n));
  }
  return absl::OkStatus();
}

int64_t PaddingLayout::RealOnDevice(int device) const {
  const int64_t begin = device * slots_per_device();
  return std::clamp<int64_t>(n_examples - begin, 0, slots_per_device());
}

absl::StatusOr<PaddingLayout> PadEvalDataset(int64_t n_examples, int n_devices,
                                             int64_t per_device_batch) {
  if (n_examples < 0) {
    return absl::InvalidArgumentError("example count must be >= 0");
  }
  if (n_devices < 1 || per_device_batch < 1) {
    return absl::InvalidArgumentError(
        "devices and per-device batch must be >= 1");
  }
  PaddingLayout layout;
  layout.n_examples = n_examples;
  layout.n_devices = n_devices;
  layout.per_device_batch = per_device_batch;
  const int64_t global = n_devices * per_device_batch;
  layout.steps = (n_examples + global - 1) / global;
  return layout;
}

std::vector<EvalBatch> MakeSkeleton(const PaddingLayout& layout) {
  std::vector<EvalBatch> devices(layout.n_devices);
  for (int d = 0; d < layout.n_devices; ++d) {
    const int64_t slots = layout.slots_per_device();
    const int64_t real = layout.RealOnDevice(d);
    devices[d].labels.assign(slots, 0);
    devices[d].valid.assign(slots, false);
    std::fill_n(devices[d].valid.begin(), real, true);
  }
  return devices;
}

uint32_t ScoreKey(float score) {
  if (score == 0.0f) score = 0.0f;
  const uint32_t bits = std::bit_cast<uint32_t>(score);
  return (bits & 0x80000000u) ? ~bits : (bits | 0x80000000u);
}

absl::Status MetricAccumulator::Add(const EvalBatch& batch) {
  PODSCALE_RETURN_IF_ERROR(batch.Validate());
  for (int64_t i = 0; i < batch.size(); ++i) {
    if (!batch.valid[i]) continue;
    if (!batch.predictions.empty()) {
      ++count;
      if (batch.predictions[i] == batch.labels[i]) ++correct;
    }
    if (!batch.scores.empty()) {
      if (std::isnan(batch.scores[i])) {
        return absl::InvalidArgumentError("NaN score");
      }
      if (batch.labels[i] != 0 && batch.labels[i] != 1) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "AUC label must be 0 or 1, got %d", batch.labels[i]));
      }
      auto& [pos, neg] = score_counts[ScoreKey(batch.scores[i])];
      (batch.labels[i] == 1 ? pos : neg) += 1;
    }
  }
  return absl::OkStatus();
}

void MetricAccumulator::Merge(const MetricAccumulator& other) {
  correct += other.correct;
  count += other.count;
  for (const auto& [key, c] : other.score_counts) {
    auto& mine = score_counts[key];
    mine.first += c.first;
    mine.second += c.second;
  }
}

absl::StatusOr<double> MetricAccumulator::Accuracy() const {
  if (count == 0) return absl::InvalidArgumentError("no real examples");
  return static_cast<double>(correct) / static_cast<double>(count);
}

absl::StatusOr<double> MetricAccumulator::Auc() const {
  uint64_t numerator = 0;
  int64_t negatives_below = 0;
  int64_t positives = 0;
  for (const auto& [key, c] : score_counts) {
    numerator += static_cast<uint64_t>(c.first) *
                 static_cast<uint64_t>(2 * negatives_below + c.second);
    negatives_below += c.second;
    positives += c.first;
  }
  if (positives == 0 || negatives_below == 0) {
    return absl::InvalidArgumentError("AUC needs both classes");
  }
  return AucFromNumerator(numerator, positives, negatives_below);
}

absl::StatusOr<double> DistributedAccuracy(std::span<const EvalBatch> devices) {
  if (devices.empty()) return absl::InvalidArgumentError("no devices");
  if (devices.size() > static_cast<size_t>(kMaxLimbDevices)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "at most %d devices keep limb sums exact", kMaxLimbDevices));
  }
  std::vector<Payload> payloads(devices.size());
  std::vector<Coord> ring(devices.size());
  for (size_t d = 0; d < devices.size(); ++d) {
    PODSCALE_RETURN_IF_ERROR(devices[d].Validate());
    if (devices[d].predictions.empty() && devices[d].size() > 0) {
      return absl::InvalidArgumentError(
          absl::StrFormat("device %d has no predictions", d));
    }
    int64_t correct = 0;
    int64_t count = 0;
    for (int64_t i = 0; i < devices[d].size(); ++i) {
      if (!devices[d].valid[i]) continue;
      ++count;
      if (devices[d].predictions[i] == devices[d].labels[i]) ++correct;
    }
    payloads[d].values = ToLimbs(correct);
    const std::vector<float> count_limbs = ToLimbs(count);
    payloads[d].values.insert(payloads[d].values.end(), count_limbs.begin(),
                              count_limbs.end());
    ring[d] = Coord{static_cast<int>(d), 0};
  }
  PODSCALE_ASSIGN_OR_RETURN(GatherResult reduced,
                            AllReduce(ring, payloads, ElemType::kF32));
  const std::span<const float> sums = reduced.payloads.front().values;
  const int64_t correct = FromLimbs(sums.subspan(0, kLimbs));
  const int64_t count = FromLimbs(sums.subspan(kLimbs, kLimbs));
  if (count == 0) return absl::InvalidArgumentError("no real examples");
  return static_cast<double>(correct) / static_cast<double>(count);
}

absl::StatusOr<double> AucRoc(std::span<const float> scores,
                              std::span<const int32_t> labels) {
  if (scores.size() != labels.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%d scores for %d labels", scores.size(), labels.size()));
  }
  const int64_t n = static_cast<int64_t>(scores.size());
  int64_t positives = 0;
  bool bad_label = false;
  bool nan = false;
#pragma omp parallel for reduction(+ : positives) \
    reduction(|| : bad_label, nan) if (n > (1 << 16))
  for (int64_t i = 0; i < n; ++i) {
    positives += labels[i] == 1;
    bad_label = bad_label || (labels[i] != 0 && labels[i] != 1);
    nan = nan || std::isnan(scores[i]);
  }
  if (bad_label) return absl::InvalidArgumentError("labels must be 0 or 1");
  if (nan) return absl::InvalidArgumentError("NaN score");
  const int64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    return absl::InvalidArgumentError("AUC needs both classes");
  }

  std::vector<uint32_t> pos(positives);
  std::vector<uint32_t> neg(negatives);
  int64_t p = 0;
  int64_t q = 0;
  for (int64_t i = 0; i < n; ++i) {
    const uint32_t key = ScoreKey(scores[i]);
    if (labels[i] == 1) {
      pos[p++] = key;
    } else {
      neg[q++] = key;
    }
  }
  RadixSort(pos);
  RadixSort(neg);

  uint64_t numerator = 0;
  int64_t below = 0;
  for (int64_t i = 0; i < positives;) {
    const uint32_t key = pos[i];
    int64_t run = 1;
    while (i + run < positives && pos[i + run] == key) ++run;
    while (below < negatives && neg[below] < key) ++below;
    int64_t tied = 0;
    while (below + tied < negatives && neg[below + tied] == key) ++tied;
    numerator +=
        static_cast<uint64_t>(run) * static_cast<uint64_t>(2 * below + tied);
    i += run;
  }
  return AucFromNumerator(numerator, positives, negatives);
}

absl::StatusOr<MetricAccumulator> MultiStepEval(
    std::span<const EvalBatch> batches, int steps_per_transfer) {
  if (steps_per_transfer < 1) {
    return absl::InvalidArgumentError("steps_per_transfer must be >= 1");
  }
  MetricAccumulator host;
  for (size_t begin = 0; begin < batches.size(); begin += steps_per_transfer) {
    MetricAccumulator device;
    const size_t end = std::min(batches.size(), begin + steps_per_transfer);
    for (size_t i = begin; i < end; ++i) {
      PODSCALE_RETURN_IF_ERROR(device.Add(batches[i]));
    }
    host.Merge(device);
  }
  return host;
}

absl::StatusOr<std::vector<int>> RoundRobinAssign(int64_t events, int workers) {
  if (workers < 1) return absl::InvalidArgumentError("workers must be >= 1");
  if (events < 0) return absl::InvalidArgumentError("events must be >= 0");
  std::vector<int> assignment(events);
  for (int64_t i = 0; i < events; ++i) {
    assignment[i] = static_cast<int>(i % workers);
  }
  return assignment;
}

std::string MetricRecordsCsv(std::span<const MetricRecord> records) {
  std::string out = "metric,value,n_real,n_dummy,wall_time\n";
  for (const MetricRecord& r : records) {
    absl::StrAppendFormat(&out, "%s,%.17g,%d,%d,%.6f\n", r.metric, r.value,
                          r.n_real, r.n_dummy, r.wall_time);
  }
  return out;
}

}  // namespace podscale

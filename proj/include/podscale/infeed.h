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

// Input-pipeline simulation: file sharding across hosts, file-order and
// streaming-buffer shuffle policies, coverage and run-to-run dispersion.
//
// ShuffleThenRepeat draws a fresh file order every epoch and shuffles each
// epoch through its own buffer, which drains at the epoch boundary.
// RepeatThenShuffle draws one file order, repeats it, and runs a single buffer
// over the whole repeated stream, so neighbouring epochs can mix.

#ifndef PODSCALE_INFEED_H_
#define PODSCALE_INFEED_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace podscale {

enum class FileOrder { kShuffleThenRepeat, kRepeatThenShuffle };

absl::string_view FileOrderName(FileOrder order);
absl::StatusOr<FileOrder> ParseFileOrder(absl::string_view name);

struct ShufflePolicy {
  FileOrder file_order = FileOrder::kShuffleThenRepeat;
  int64_t buffer_size = 1;
  uint64_t seed = 0;
};

// files[f] is the number of sequences in file f.
struct Dataset {
  std::vector<int64_t> files;

  static Dataset Uniform(int n_files, int64_t per_file);
  int64_t size() const;
};

struct TraceEntry {
  int32_t file = 0;
  int64_t sequence = 0;
  // Position in the unshuffled (file-ordered, repeated) input stream.
  int64_t input_position = 0;
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

using StreamTrace = std::vector<TraceEntry>;

// Contiguous split; the first n_files % n_hosts hosts take one extra file.
absl::StatusOr<std::vector<std::vector<int>>> ShardFiles(int n_files,
                                                         int n_hosts);

// Uniform integer in [0, n) by rejection, independent of the standard
// library's distribution implementation.
uint64_t UniformBelow(std::mt19937_64& rng, uint64_t n);

// Emits `input` through a buffer of `buffer_size`: fill with the first B
// items, then repeatedly emit a uniformly chosen slot and refill it with the
// next input; once input runs out, drain uniformly.
void BufferShuffle(std::span<const TraceEntry> input, int64_t buffer_size,
                   std::mt19937_64& rng, StreamTrace* out);

absl::StatusOr<StreamTrace> StreamWithPolicy(const Dataset& dataset,
                                             const ShufflePolicy& policy,
                                             int epochs);

// Fraction of the dataset's distinct sequences seen in the first `window`
// emissions.
absl::StatusOr<double> Coverage(const StreamTrace& trace,
                                const Dataset& dataset, int64_t window);

// Runs the policy once per seed and splits each trace into consecutive
// batches. For every step, takes the population variance across runs of each
// file's count in the batch and sums it over files; returns the mean over
// steps. A trailing partial batch is dropped.
absl::StatusOr<double> Dispersion(const Dataset& dataset, ShufflePolicy policy,
                                  std::span<const uint64_t> seeds,
                                  int64_t batch_size, int epochs = 1);

// Fixed list of 100 seeds for reproducible Monte Carlo comparisons.
std::span<const uint64_t> CommittedSeeds();

// Header: position,file,sequence,input_position
std::string TraceCsv(const StreamTrace& trace);

}  // namespace podscale

#endif  // PODSCALE_INFEED_H_

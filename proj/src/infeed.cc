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

#include "podscale/infeed.h"

#include <algorithm>
#include <numeric>

#include "absl/strings/str_format.h"
#include "podscale/status_macros.h"

namespace podscale {
namespace {

void ShuffleInPlace(std::vector<int>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[UniformBelow(rng, i)]);
  }
}

// Appends every sequence of the files in `order`, numbering input positions
// from *next.
void AppendFiles(const Dataset& dataset, std::span<const int> order,
                 int64_t* next, std::vector<TraceEntry>* out) {
  for (int f : order) {
    for (int64_t s = 0; s < dataset.files[f]; ++s) {
      out->push_back({f, s, (*next)++});
    }
  }
}

}  // namespace

std::span<const uint64_t> CommittedSeeds() {
  static constexpr uint64_t kSeeds[100] = {
      0xc8764d7edb5586aeull, 0x5457da22336da9d8ull, 0x1053383ac7ec2c92ull,
      0x7513bda5dd0fc8a0ull, 0xf3cb002680986de3ull, 0xca8b43828b863916ull,
      0xd53c68db1d969e0eull, 0xe042d32c3886b777ull, 0x9e1165c60e56ecf8ull,
      0x41902d7745cbf51eull, 0xfb5fdd8e9365339dull, 0xecb1488cd9cf7d3cull,
      0xbb4e152c2f89a2adull, 0x820e815b8a28448eull, 0x0c91c843ec327e9cull,
      0xdd5600ca3d550f38ull, 0x20555e7dcc32bf8bull, 0xa3e85cc2e5c9f106ull,
      0x137398771c6557e6ull, 0xc9e9c89d96b11aefull, 0x38e1f590ed886e9eull,
      0xc0b2ebc79b5de5e8ull, 0x364b3f95d1933512ull, 0x8c292a31e02e3377ull,
      0x1019c430805903bbull, 0xbc248d29e166ae45ull, 0xae7f4d8a18afeab0ull,
      0xafda794be7d2b1a0ull, 0x0016b6ec7c34dea2ull, 0x13c8b5ddd23f529bull,
      0x1a3286c58e6dfd71ull, 0x2bc49ffbb0608fcfull, 0x1735ad5dc91b192cull,
      0x953ec5f8a0228df8ull, 0x0af0e9e6ec362abfull, 0xd2996301916ec3eaull,
      0x56530aa4083efb59ull, 0xf5d1402d8c35e468ull, 0x1d7bac5bb677be97ull,
      0x4b5ff9e5e6fc1c13ull, 0x90888c0818e96c55ull, 0x1440af790ed3160dull,
      0xc5faa47ab55caecbull, 0x849cd16575addd99ull, 0xe78a9bc33a74eb91ull,
      0xbfb1da07fcc3a242ull, 0x7db72a3f793a9253ull, 0xd7b599dc833325e5ull,
      0xf5410400de60a8a9ull, 0x84e603f26e402ffbull, 0x07aa708132960410ull,
      0xb796e359bfb042f2ull, 0x7f203c37f28a0759ull, 0xad62c4f89275e82bull,
      0x3324c3ebd375bc4aull, 0xbba1b2a93290ded0ull, 0x059c57f8fc221a97ull,
      0x8614d741223f1451ull, 0x4e476c0a1e375f9dull, 0xe570600367904403ull,
      0x09a70a6b336ca211ull, 0x0204fd88e4fc8fdfull, 0x5fb657dd5fcf637eull,
      0x724ed4c3b419e82aull, 0xc595c3c0343add0eull, 0xc3c0e6121da2dda2ull,
      0x13800fc996c9457bull, 0xe7d959039f392545ull, 0xd5d3f3303b52bff1ull,
      0x304a45e5268c0843ull, 0x9c9095ed818b36b3ull, 0x860ab6cb1474ade7ull,
      0xaf65bd8cf6ea20a9ull, 0x91a843ad5be9000full, 0x37bc8d87aff2b363ull,
      0x827077bd68fdcd23ull, 0x2d1cd78e66455f3eull, 0xf78bf674ec5b9d09ull,
      0x7498187898c36983ull, 0x3019bd26721f2fc6ull, 0x8d3cf6fccf255960ull,
      0xa6eb96b041b50f82ull, 0x7830800c614e30eaull, 0xcd6744efd68c53edull,
      0x13e827b851fb3569ull, 0x3b1428d4058dc659ull, 0x3c946dede89f326dull,
      0x837c3e290ace1385ull, 0x92e67c8de7ab48d5ull, 0x52137a298dd49fddull,
      0x22462907b9ff2eb8ull, 0x453c6728f3973e82ull, 0x62105289fe7ddf9eull,
      0x7ff001c40b8dfc74ull, 0x893d5685c55cdbc2ull, 0x88b7721f6567c501ull,
      0x6840fb26c0590236ull, 0x813373dc60bf322bull, 0x3bec8567d165b85full,
      0x5909342ecae13e2bull,
  };
  return kSeeds;
}

absl::string_view FileOrderName(FileOrder order) {
  return order == FileOrder::kShuffleThenRepeat ? "shuffle_then_repeat"
                                                : "repeat_then_shuffle";
}

absl::StatusOr<FileOrder> ParseFileOrder(absl::string_view name) {
  if (name == "shuffle_then_repeat") return FileOrder::kShuffleThenRepeat;
  if (name == "repeat_then_shuffle") return FileOrder::kRepeatThenShuffle;
  return absl::InvalidArgumentError(absl::StrFormat(
      "unknown file order '%s' (shuffle_then_repeat, repeat_then_shuffle)",
      name));
}

Dataset Dataset::Uniform(int n_files, int64_t per_file) {
  return Dataset{std::vector<int64_t>(n_files, per_file)};
}

int64_t Dataset::size() const {
  return std::accumulate(files.begin(), files.end(), int64_t{0});
}

absl::StatusOr<std::vector<std::vector<int>>> ShardFiles(int n_files,
                                                         int n_hosts) {
  if (n_hosts < 1) return absl::InvalidArgumentError("n_hosts must be >= 1");
  if (n_files < 0) return absl::InvalidArgumentError("n_files must be >= 0");
  std::vector<std::vector<int>> hosts(n_hosts);
  const int base = n_files / n_hosts;
  const int extra = n_files % n_hosts;
  int next = 0;
  for (int h = 0; h < n_hosts; ++h) {
    const int load = base + (h < extra ? 1 : 0);
    for (int i = 0; i < load; ++i) hosts[h].push_back(next++);
  }
  return hosts;
}

uint64_t UniformBelow(std::mt19937_64& rng, uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

void BufferShuffle(std::span<const TraceEntry> input, int64_t buffer_size,
                   std::mt19937_64& rng, StreamTrace* out) {
  std::vector<TraceEntry> buffer;
  buffer.reserve(std::min<int64_t>(buffer_size, input.size()));
  size_t next = 0;
  while (next < input.size() &&
         static_cast<int64_t>(buffer.size()) < buffer_size) {
    buffer.push_back(input[next++]);
  }
  while (!buffer.empty()) {
    const uint64_t slot = UniformBelow(rng, buffer.size());
    out->push_back(buffer[slot]);
    if (next < input.size()) {
      buffer[slot] = input[next++];
    } else {
      buffer[slot] = buffer.back();
      buffer.pop_back();
    }
  }
}

absl::StatusOr<StreamTrace> StreamWithPolicy(const Dataset& dataset,
                                             const ShufflePolicy& policy,
                                             int epochs) {
  if (epochs < 1) return absl::InvalidArgumentError("epochs must be >= 1");
  if (policy.buffer_size < 1) {
    return absl::InvalidArgumentError("buffer_size must be >= 1");
  }
  std::mt19937_64 rng(policy.seed);
  std::vector<int> order(dataset.files.size());
  std::iota(order.begin(), order.end(), 0);
  StreamTrace trace;
  trace.reserve(dataset.size() * epochs);
  int64_t next = 0;
  if (policy.file_order == FileOrder::kShuffleThenRepeat) {
    std::vector<TraceEntry> epoch;
    for (int e = 0; e < epochs; ++e) {
      ShuffleInPlace(order, rng);
      epoch.clear();
      AppendFiles(dataset, order, &next, &epoch);
      BufferShuffle(epoch, policy.buffer_size, rng, &trace);
    }
  } else {
    ShuffleInPlace(order, rng);
    std::vector<TraceEntry> input;
    input.reserve(dataset.size() * epochs);
    for (int e = 0; e < epochs; ++e) AppendFiles(dataset, order, &next, &input);
    BufferShuffle(input, policy.buffer_size, rng, &trace);
  }
  return trace;
}

absl::StatusOr<double> Coverage(const StreamTrace& trace,
                                const Dataset& dataset, int64_t window) {
  if (window < 0 || window > static_cast<int64_t>(trace.size())) {
    return absl::InvalidArgumentError(
        absl::StrFormat("window %d outside [0, %d]", window, trace.size()));
  }
  if (dataset.size() == 0) return absl::InvalidArgumentError("empty dataset");
  std::vector<int64_t> file_base(dataset.files.size() + 1, 0);
  std::partial_sum(dataset.files.begin(), dataset.files.end(),
                   file_base.begin() + 1);
  std::vector<bool> seen(dataset.size(), false);
  int64_t distinct = 0;
  for (int64_t i = 0; i < window; ++i) {
    const TraceEntry& e = trace[i];
    if (e.file < 0 || e.file >= static_cast<int>(dataset.files.size()) ||
        e.sequence < 0 || e.sequence >= dataset.files[e.file]) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "trace entry %d (file %d, sequence %d) is not in the dataset", i,
          e.file, e.sequence));
    }
    const int64_t id = file_base[e.file] + e.sequence;
    if (!seen[id]) {
      seen[id] = true;
      ++distinct;
    }
  }
  return static_cast<double>(distinct) / static_cast<double>(dataset.size());
}

absl::StatusOr<double> Dispersion(const Dataset& dataset, ShufflePolicy policy,
                                  std::span<const uint64_t> seeds,
                                  int64_t batch_size, int epochs) {
  if (seeds.size() < 2) return absl::InvalidArgumentError("need >= 2 runs");
  if (batch_size < 1)
    return absl::InvalidArgumentError("batch_size must be >= 1");
  const int64_t steps = dataset.size() * epochs / batch_size;
  const size_t n_files = dataset.files.size();
  const size_t runs = seeds.size();
  // histograms[run][step * n_files + file]
  std::vector<std::vector<int64_t>> histograms(runs);
  for (size_t r = 0; r < runs; ++r) {
    policy.seed = seeds[r];
    PODSCALE_ASSIGN_OR_RETURN(StreamTrace trace,
                              StreamWithPolicy(dataset, policy, epochs));
    histograms[r].assign(steps * n_files, 0);
    for (int64_t i = 0; i < steps * batch_size; ++i) {
      ++histograms[r][(i / batch_size) * n_files + trace[i].file];
    }
  }
  if (steps == 0) return 0.0;
  double total = 0.0;
  for (int64_t s = 0; s < steps; ++s) {
    double step_sum = 0.0;
    for (size_t f = 0; f < n_files; ++f) {
      double mean = 0.0;
      for (size_t r = 0; r < runs; ++r) mean += histograms[r][s * n_files + f];
      mean /= runs;
      double var = 0.0;
      for (size_t r = 0; r < runs; ++r) {
        const double d = histograms[r][s * n_files + f] - mean;
        var += d * d;
      }
      step_sum += var / runs;
    }
    total += step_sum;
  }
  return total / steps;
}

std::string TraceCsv(const StreamTrace& trace) {
  std::string out = "position,file,sequence,input_position\n";
  for (size_t i = 0; i < trace.size(); ++i) {
    absl::StrAppendFormat(&out, "%d,%d,%d,%d\n", i, trace[i].file,
                          trace[i].sequence, trace[i].input_position);
  }
  return out;
}

}  // namespace podscale

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

#include "podscale/commands.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "podscale/infeed.h"
#include "podscale/metrics.h"
#include "podscale/status_macros.h"
#include "podscale/verify.h"

namespace podscale {
namespace {

constexpr uint64_t kSeedStep = 0x9E3779B97F4A7C15ull;

std::string Header(const Scenario& scenario, uint64_t seed) {
  return absl::StrFormat("# scenario: %s\n# config_hash: %s\n# seed: %d\n",
                         scenario.name, ScenarioHash(scenario), seed);
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

absl::StatusOr<StepBreakdown> RowAt(const std::vector<StepBreakdown>& rows,
                                    int64_t chips) {
  for (const StepBreakdown& row : rows) {
    if (row.chips == chips) return row;
  }
  return absl::NotFoundError(
      absl::StrFormat("no sweep row for %d chips", chips));
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

absl::StatusOr<OutputFormat> ParseOutputFormat(absl::string_view name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "table") return OutputFormat::kTable;
  return absl::InvalidArgumentError(
      absl::StrCat("--format: expected csv or table, got '", name, "'"));
}

absl::StatusOr<CommandOutput> CmdVerify(const Scenario& scenario,
                                        uint64_t seed) {
  PODSCALE_ASSIGN_OR_RETURN(std::vector<CheckResult> results,
                            RunVerifySuites(scenario, seed));
  CommandOutput out;
  out.text = Header(scenario, seed) + CheckResultsCsv(results);
  for (const CheckResult& r : results) {
    if (!r.passed()) out.exit = ExitCode::kVerificationFailure;
  }
  return out;
}

absl::StatusOr<CommandOutput> CmdSimulate(const Scenario& scenario,
                                          uint64_t seed) {
  if (scenario.sweep.empty()) {
    return absl::InvalidArgumentError(
        "sweep: simulate needs at least one point");
  }
  PODSCALE_ASSIGN_OR_RETURN(std::vector<StepBreakdown> rows,
                            SweepScaling(scenario.ToScaling()));
  CommandOutput out;
  out.text = Header(scenario, seed) + BreakdownCsv(rows);
  const CalibrationConfig& cal = scenario.calibration;
  if (cal.chips > 0) {
    PODSCALE_ASSIGN_OR_RETURN(StepBreakdown row, RowAt(rows, cal.chips));
    const double lo = cal.target_fraction - cal.tolerance;
    const double hi = cal.target_fraction + cal.tolerance;
    const double got = row.allreduce_fraction();
    const bool ok = got >= lo && got <= hi;
    absl::StrAppendFormat(
        &out.text,
        "# calibration check (simulated): chips=%d allreduce_fraction=%.4f "
        "target=%.4f band=[%.4f,%.4f] %s\n",
        cal.chips, got, cal.target_fraction, lo, hi, ok ? "PASS" : "FAIL");
    if (!ok) out.exit = ExitCode::kVerificationFailure;
  }
  return out;
}

absl::StatusOr<CommandOutput> CmdPlan(const Scenario& scenario) {
  PODSCALE_ASSIGN_OR_RETURN(DeviceMesh mesh, scenario.mesh.Build());
  CommandOutput out;
  out.text = Header(scenario, 0);

  // Elementwise shards of one weight partition over its data-parallel group.
  const int64_t n = scenario.payload.elements;
  const int64_t shards = mesh.num_devices() / scenario.stride;
  int64_t min_shard = n;
  int64_t max_shard = 0;
  for (int64_t k = 0; k < shards; ++k) {
    const int64_t size = (k + 1) * n / shards - k * n / shards;
    min_shard = std::min(min_shard, size);
    max_shard = std::max(max_shard, size);
  }
  absl::StrAppendFormat(
      &out.text,
      "elements,devices,stride,shards,min_shard_elements,max_shard_elements\n"
      "%d,%d,%d,%d,%d,%d\n",
      n, mesh.num_devices(), scenario.stride, shards, min_shard, max_shard);

  const OptimizerConfig& opt = scenario.optimizer;
  if (opt.cost_chips > 0) {
    PODSCALE_ASSIGN_OR_RETURN(std::vector<StepBreakdown> rows,
                              SweepScaling(scenario.ToScaling()));
    PODSCALE_ASSIGN_OR_RETURN(StepBreakdown row, RowAt(rows, opt.cost_chips));
    OptimizerCostScenario cost;
    cost.params = static_cast<double>(n);
    cost.flops_per_param = opt.flops_per_param;
    cost.flops_rate = scenario.compute.flops_rate;
    cost.other_step_seconds = row.step_time();
    const OptimizerCostFraction fraction =
        ComputeOptimizerCostFraction(cost, opt.cost_chips / scenario.stride);
    absl::StrAppendFormat(
        &out.text,
        "\noptimizer,chips,shards,unsharded_fraction,sharded_fraction\n"
        "%s,%d,%d,%.6f,%.6f\n",
        OptimizerKindName(opt.spec.kind), opt.cost_chips, fraction.shards,
        fraction.unsharded, fraction.sharded);
  }

  const PlacementConfig& placement = scenario.placement;
  if (!placement.tables.empty()) {
    PODSCALE_ASSIGN_OR_RETURN(
        TablePlacement plan,
        PlaceTables(placement.tables, placement.devices,
                    placement.capacity_bytes, placement.threshold_bytes));
    out.text += "\n" + plan.ToCsv(placement.tables);
  }
  return out;
}

absl::StatusOr<CommandOutput> CmdMetrics(const Scenario& scenario,
                                         uint64_t seed) {
  const MetricsConfig& cfg = scenario.metrics;
  std::mt19937_64 rng(seed);
  std::vector<MetricRecord> records;

  PODSCALE_ASSIGN_OR_RETURN(
      PaddingLayout layout,
      PadEvalDataset(cfg.eval_examples, cfg.devices, cfg.per_device_batch));
  std::vector<EvalBatch> devices = MakeSkeleton(layout);
  for (EvalBatch& batch : devices) {
    batch.predictions.resize(batch.size());
    batch.scores.resize(batch.size());
    for (int64_t i = 0; i < batch.size(); ++i) {
      const int64_t level = UniformBelow(rng, cfg.score_levels);
      batch.scores[i] = static_cast<float>(level) / cfg.score_levels;
      batch.labels[i] = static_cast<int64_t>(UniformBelow(rng, 1000)) <
                        300 + 400 * level / cfg.score_levels;
      batch.predictions[i] =
          UniformBelow(rng, 4) == 0 ? 1 - batch.labels[i] : batch.labels[i];
    }
  }
  auto start = std::chrono::steady_clock::now();
  PODSCALE_ASSIGN_OR_RETURN(double accuracy, DistributedAccuracy(devices));
  records.push_back({"accuracy", accuracy, layout.n_examples, layout.n_dummy(),
                     Seconds(start)});

  // Per-step batches, device-major within each step.
  std::vector<EvalBatch> steps;
  for (int64_t s = 0; s < layout.steps; ++s) {
    EvalBatch step;
    for (const EvalBatch& device : devices) {
      const int64_t begin = s * layout.per_device_batch;
      const int64_t end = begin + layout.per_device_batch;
      step.scores.insert(step.scores.end(), device.scores.begin() + begin,
                         device.scores.begin() + end);
      step.predictions.insert(step.predictions.end(),
                              device.predictions.begin() + begin,
                              device.predictions.begin() + end);
      step.labels.insert(step.labels.end(), device.labels.begin() + begin,
                         device.labels.begin() + end);
      step.valid.insert(step.valid.end(), device.valid.begin() + begin,
                        device.valid.begin() + end);
    }
    steps.push_back(std::move(step));
  }
  start = std::chrono::steady_clock::now();
  PODSCALE_ASSIGN_OR_RETURN(MetricAccumulator acc,
                            MultiStepEval(steps, cfg.steps_per_transfer));
  PODSCALE_ASSIGN_OR_RETURN(double multi_accuracy, acc.Accuracy());
  PODSCALE_ASSIGN_OR_RETURN(double multi_auc, acc.Auc());
  const double multi_time = Seconds(start);
  records.push_back({"accuracy_multistep", multi_accuracy, layout.n_examples,
                     layout.n_dummy(), multi_time});
  records.push_back({"auc_multistep", multi_auc, layout.n_examples,
                     layout.n_dummy(), multi_time});

  std::vector<float> scores(cfg.auc_samples);
  std::vector<int32_t> labels(cfg.auc_samples);
  for (int64_t i = 0; i < cfg.auc_samples; ++i) {
    const int64_t level = UniformBelow(rng, cfg.score_levels);
    scores[i] = static_cast<float>(level) / cfg.score_levels;
    labels[i] = static_cast<int64_t>(UniformBelow(rng, 1000)) <
                300 + 400 * level / cfg.score_levels;
  }
  start = std::chrono::steady_clock::now();
  PODSCALE_ASSIGN_OR_RETURN(double auc, AucRoc(scores, labels));
  records.push_back({"auc", auc, cfg.auc_samples, 0, Seconds(start)});

  CommandOutput out;
  out.text = Header(scenario, seed) + MetricRecordsCsv(records);
  return out;
}

std::vector<uint64_t> ShuffleSeeds(uint64_t seed, int runs) {
  std::span<const uint64_t> committed = CommittedSeeds();
  std::vector<uint64_t> seeds(runs);
  for (int i = 0; i < runs; ++i) {
    const uint64_t round = seed + static_cast<uint64_t>(i) / committed.size();
    seeds[i] = committed[i % committed.size()] + round * kSeedStep;
  }
  return seeds;
}

absl::StatusOr<CommandOutput> CmdShuffleSim(const Scenario& scenario,
                                            uint64_t seed) {
  const ShuffleConfig& cfg = scenario.shuffle;
  const Dataset dataset = Dataset::Uniform(cfg.files, cfg.examples_per_file);
  const std::vector<uint64_t> seeds = ShuffleSeeds(seed, cfg.runs);
  CommandOutput out;
  out.text = Header(scenario, seed) +
             "file_order,buffer_size,runs,mean_coverage,mean_dispersion\n";
  for (FileOrder order :
       {FileOrder::kShuffleThenRepeat, FileOrder::kRepeatThenShuffle}) {
    for (int64_t buffer : cfg.buffer_sizes) {
      ShufflePolicy policy{order, buffer, 0};
      double coverage = 0.0;
      for (uint64_t s : seeds) {
        policy.seed = s;
        PODSCALE_ASSIGN_OR_RETURN(
            StreamTrace trace, StreamWithPolicy(dataset, policy, cfg.epochs));
        PODSCALE_ASSIGN_OR_RETURN(double c,
                                  Coverage(trace, dataset, dataset.size()));
        coverage += c;
      }
      coverage /= static_cast<double>(seeds.size());
      PODSCALE_ASSIGN_OR_RETURN(
          double dispersion,
          Dispersion(dataset, policy, seeds, cfg.batch_size, cfg.epochs));
      absl::StrAppendFormat(&out.text, "%s,%d,%d,%.17g,%.17g\n",
                            FileOrderName(order), buffer, cfg.runs, coverage,
                            dispersion);
    }
  }
  absl::StrAppendFormat(&out.text, "# seeds: committed list + %d * 0x%x\n",
                        seed, kSeedStep);
  return out;
}

absl::StatusOr<ReportInput> ParseBreakdownCsv(absl::string_view name,
                                              absl::string_view text) {
  ReportInput input;
  input.name = std::string(name);
  std::map<std::string, size_t> columns;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      input.comments.emplace_back(line);
      continue;
    }
    std::vector<absl::string_view> cells = absl::StrSplit(line, ',');
    if (columns.empty()) {
      for (size_t i = 0; i < cells.size(); ++i)
        columns[std::string(cells[i])] = i;
      for (const char* required :
           {"chips", "batch", "epochs", "compute_s", "allreduce_s"}) {
        if (!columns.contains(required)) {
          return absl::InvalidArgumentError(absl::StrFormat(
              "%s: not a sweep CSV (missing column %s)", name, required));
        }
      }
      continue;
    }
    if (cells.size() != columns.size()) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "%s:%d: expected %d cells", name, line_no, columns.size()));
    }
    StepBreakdown row;
    const bool ok =
        absl::SimpleAtoi(cells[columns["chips"]], &row.chips) &&
        absl::SimpleAtoi(cells[columns["batch"]], &row.batch) &&
        absl::SimpleAtod(cells[columns["epochs"]], &row.epochs) &&
        absl::SimpleAtod(cells[columns["compute_s"]], &row.compute_time) &&
        absl::SimpleAtod(cells[columns["allreduce_s"]], &row.allreduce_time);
    if (!ok) {
      return absl::InvalidArgumentError(
          absl::StrFormat("%s:%d: malformed number", name, line_no));
    }
    input.rows.push_back(row);
  }
  if (columns.empty()) {
    return absl::InvalidArgumentError(absl::StrFormat("%s: empty input", name));
  }
  return input;
}

absl::StatusOr<CommandOutput> CmdReport(
    const std::vector<ReportInput>& inputs) {
  if (inputs.empty()) {
    return absl::InvalidArgumentError("report: no input CSVs given");
  }
  std::map<int64_t, std::pair<StepBreakdown, std::string>> merged;
  for (const ReportInput& input : inputs) {
    for (const StepBreakdown& row : input.rows) {
      auto [it, inserted] = merged.try_emplace(row.chips, row, input.name);
      const StepBreakdown& old = it->second.first;
      if (!inserted && (old.batch != row.batch || old.epochs != row.epochs ||
                        old.compute_time != row.compute_time ||
                        old.allreduce_time != row.allreduce_time)) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "conflicting rows for %d chips in %s and %s; pass only one of them",
            row.chips, it->second.second, input.name));
      }
    }
  }
  if (merged.empty())
    return absl::InvalidArgumentError("report: inputs have no rows");
  std::vector<StepBreakdown> rows;
  for (const auto& [chips, entry] : merged) rows.push_back(entry.first);
  const StepBreakdown base =
      merged.contains(16) ? merged.at(16).first : rows.front();
  ApplySpeedups(base, rows);

  CommandOutput out;
  out.text =
      "# simulated: every value below comes from the cost model, none is "
      "measured\n";
  absl::StrAppendFormat(
      &out.text,
      "chips,batch,epochs,step_s,allreduce_fraction,step_speedup_vs_%d,"
      "throughput_speedup,e2e_speedup,source\n",
      base.chips);
  for (const StepBreakdown& r : rows) {
    absl::StrAppendFormat(
        &out.text,
        "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
        "simulated\n",
        r.chips, r.batch, r.epochs, r.step_time(), r.allreduce_fraction(),
        base.step_time() / r.step_time(), r.throughput_speedup, r.e2e_speedup);
  }
  absl::StrAppendFormat(&out.text, "# provenance: base_chips=%d\n", base.chips);
  for (const ReportInput& input : inputs) {
    std::vector<std::string> notes;
    for (const std::string& c : input.comments) {
      absl::string_view note =
          absl::StripAsciiWhitespace(absl::string_view(c).substr(1));
      if (!absl::StartsWith(note, "calibration")) notes.emplace_back(note);
    }
    absl::StrAppendFormat(&out.text, "# input %s: %s\n", input.name,
                          absl::StrJoin(notes, "; "));
  }
  return out;
}

std::string RenderTable(absl::string_view csv) {
  std::string out;
  std::vector<std::vector<std::string>> section;
  auto flush = [&]() {
    std::vector<size_t> width;
    for (const auto& row : section) {
      if (width.size() < row.size()) width.resize(row.size(), 0);
      for (size_t i = 0; i < row.size(); ++i) {
        width[i] = std::max(width[i], row[i].size());
      }
    }
    for (const auto& row : section) {
      std::string line;
      for (size_t i = 0; i < row.size(); ++i) {
        if (i > 0) line += "  ";
        line += row[i];
        if (i + 1 < row.size()) line.append(width[i] - row[i].size(), ' ');
      }
      out += line + "\n";
    }
    section.clear();
  };
  std::vector<absl::string_view> lines = absl::StrSplit(csv, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (absl::string_view line : lines) {
    if (line.empty() || line[0] == '#') {
      flush();
      out += std::string(line) + "\n";
    } else {
      section.push_back(absl::StrSplit(line, ','));
    }
  }
  flush();
  return out;
}

int RunCommand(absl::string_view name, const CommandOptions& options,
               std::ostream& out, std::ostream& err) {
  absl::StatusOr<CommandOutput> result;
  if (name == "report") {
    std::vector<ReportInput> inputs;
    for (const std::string& path : options.inputs) {
      absl::StatusOr<std::string> text = ReadFile(path);
      if (!text.ok()) {
        err << "error: " << text.status().message() << "\n";
        return static_cast<int>(ExitCode::kConfigError);
      }
      absl::StatusOr<ReportInput> input = ParseBreakdownCsv(path, *text);
      if (!input.ok()) {
        err << "error: " << input.status().message() << "\n";
        return static_cast<int>(ExitCode::kConfigError);
      }
      inputs.push_back(*std::move(input));
    }
    result = CmdReport(inputs);
  } else {
    if (options.config_path.empty()) {
      err << "error: " << name << " needs --config PATH\n";
      return static_cast<int>(ExitCode::kConfigError);
    }
    absl::StatusOr<Scenario> scenario = LoadScenario(options.config_path);
    if (!scenario.ok()) {
      err << "error: " << options.config_path << ": "
          << scenario.status().message() << "\n";
      return static_cast<int>(ExitCode::kConfigError);
    }
    if (name == "verify") {
      result = CmdVerify(*scenario, options.seed);
    } else if (name == "simulate") {
      result = CmdSimulate(*scenario, options.seed);
    } else if (name == "plan") {
      result = CmdPlan(*scenario);
    } else if (name == "metrics") {
      result = CmdMetrics(*scenario, options.seed);
    } else if (name == "shuffle-sim") {
      result = CmdShuffleSim(*scenario, options.seed);
    } else {
      err << "error: unknown command '" << name << "'\n";
      return static_cast<int>(ExitCode::kConfigError);
    }
  }
  if (!result.ok()) {
    err << "error: " << result.status().message() << "\n";
    return static_cast<int>(ExitCode::kConfigError);
  }
  const std::string text = options.format == OutputFormat::kTable
                               ? RenderTable(result->text)
                               : result->text;
  if (options.out_path.empty()) {
    out << text;
  } else {
    std::ofstream file(options.out_path, std::ios::binary);
    file << text;
    if (!file) {
      err << "error: cannot write " << options.out_path << "\n";
      return static_cast<int>(ExitCode::kConfigError);
    }
  }
  if (result->exit == ExitCode::kVerificationFailure) {
    err << name << ": verification failed\n";
  }
  return static_cast<int>(result->exit);
}

}  // namespace podscale

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

// Subcommands of the podscale tool. Each command reads a scenario, runs the
// corresponding modules and writes CSV (or an aligned table) to the output.

#ifndef PODSCALE_COMMANDS_H_
#define PODSCALE_COMMANDS_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "podscale/netsim.h"
#include "podscale/scenario.h"

namespace podscale {

enum class ExitCode { kOk = 0, kVerificationFailure = 1, kConfigError = 2 };

enum class OutputFormat { kCsv, kTable };

absl::StatusOr<OutputFormat> ParseOutputFormat(absl::string_view name);

struct CommandOptions {
  std::string config_path;
  uint64_t seed = 0;
  // Empty writes to the output stream.
  std::string out_path;
  OutputFormat format = OutputFormat::kCsv;
  // Input CSVs for `report`.
  std::vector<std::string> inputs;
};

struct CommandOutput {
  std::string text;
  ExitCode exit = ExitCode::kOk;
};

// Subcommands that take a scenario.
absl::StatusOr<CommandOutput> CmdVerify(const Scenario& scenario,
                                        uint64_t seed);
absl::StatusOr<CommandOutput> CmdSimulate(const Scenario& scenario,
                                          uint64_t seed);
absl::StatusOr<CommandOutput> CmdPlan(const Scenario& scenario);
absl::StatusOr<CommandOutput> CmdMetrics(const Scenario& scenario,
                                         uint64_t seed);
absl::StatusOr<CommandOutput> CmdShuffleSim(const Scenario& scenario,
                                            uint64_t seed);

// One loaded input of `report`: its sweep rows and its '#' comment lines.
struct ReportInput {
  std::string name;
  std::vector<StepBreakdown> rows;
  std::vector<std::string> comments;
};

absl::StatusOr<ReportInput> ParseBreakdownCsv(absl::string_view name,
                                              absl::string_view text);

// Merges sweep CSVs into one table sorted by chips. Duplicate chip counts
// must agree exactly. Speedups are relative to the 16-chip row, or to the
// smallest chip count when there is none.
absl::StatusOr<CommandOutput> CmdReport(const std::vector<ReportInput>& inputs);

// Seeds of the shuffle Monte Carlo: the committed list shifted by `seed`.
std::vector<uint64_t> ShuffleSeeds(uint64_t seed, int runs);

// Aligns CSV sections into columns. Lines starting with '#' and blank lines
// pass through and end a section.
std::string RenderTable(absl::string_view csv);

// Runs a subcommand by name. Diagnostics go to `err`; the return value is
// the process exit code.
int RunCommand(absl::string_view name, const CommandOptions& options,
               std::ostream& out, std::ostream& err);

}  // namespace podscale

#endif  // PODSCALE_COMMANDS_H_

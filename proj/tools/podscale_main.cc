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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "podscale/commands.h"

int main(int argc, char** argv) {
  CLI::App app{"podscale: multipod scaling verifier and simulator"};
  app.require_subcommand(1);
  // Subcommands inherit this, so global flags may follow the subcommand.
  app.fallthrough();

  podscale::CommandOptions options;
  int64_t seed = 0;
  std::string format = "csv";
  app.add_option("--seed", seed, "Seed for randomized commands")
      ->capture_default_str();
  app.add_option("--out", options.out_path,
                 "Write output here instead of stdout");
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"csv", "table"}))
      ->capture_default_str();

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"verify", "Run the oracle-equivalence suites"},
      {"simulate", "Simulate the scaling sweep"},
      {"plan", "Plan weight-update sharding and table placement"},
      {"metrics", "Run distributed evaluation metrics on synthetic data"},
      {"shuffle-sim", "Compare input shuffle policies"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", options.config_path, "Scenario JSON")
        ->required();
  }
  CLI::App* report = app.add_subcommand("report", "Merge sweep CSVs");
  report->add_option("inputs", options.inputs, "CSV files from simulate")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(podscale::ExitCode::kConfigError);
  }
  options.seed = static_cast<uint64_t>(seed);
  options.format = format == "table" ? podscale::OutputFormat::kTable
                                     : podscale::OutputFormat::kCsv;
  return podscale::RunCommand(app.get_subcommands().front()->get_name(),
                              options, std::cout, std::cerr);
}

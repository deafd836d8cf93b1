// Copyright 2026 The oqdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "oqdyn/runner.hpp"
#include "oqdyn/scenario.hpp"
#include "oqdyn/types.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitBudget = 4;

int guarded(bool quiet, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const oqdyn::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const oqdyn::BudgetError& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  (void)quiet;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"open quantum system dynamics: series, master-equation, and Milburn solvers"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string output_dir;
  bool quiet = false;
  app.add_option("--output-dir", output_dir, "directory for output files");
  app.add_flag("--quiet", quiet, "suppress progress output");

  auto* run_cmd = app.add_subcommand("run", "run a scenario and write its outputs");
  run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();

  auto* validate_cmd = app.add_subcommand("validate", "parse and validate a scenario");
  validate_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();

  auto* compare_cmd =
      app.add_subcommand("compare", "run a scenario with the oracle comparison forced on");
  compare_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  if (validate_cmd->parsed()) {
    return guarded(quiet, [&] {
      oqdyn::Scenario s = oqdyn::parse_scenario(scenario_path);
      if (!quiet) {
        std::cout << "valid scenario: method " << oqdyn::method_name_string(s.method.name)
                  << ", " << (s.n_steps + 1) << " time points\n";
      }
    });
  }
  const bool force_oracle = compare_cmd->parsed();
  return guarded(quiet, [&] {
    oqdyn::Scenario s = oqdyn::parse_scenario(scenario_path);
    oqdyn::run_scenario(s, output_dir, force_oracle, quiet);
  });
}

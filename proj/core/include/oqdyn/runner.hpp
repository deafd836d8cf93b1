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

#ifndef OQDYN_RUNNER_HPP
#define OQDYN_RUNNER_HPP

#include <optional>
#include <string>
#include <vector>

#include "oqdyn/scenario.hpp"
#include "oqdyn/types.hpp"

namespace oqdyn {

struct MethodTrajectory {
  std::vector<double> t;
  std::vector<DensityMatrix> rho_s;  // reduced states, computational basis
  double max_trace_drift = 0.0;
  double max_hermiticity_defect = 0.0;
  double min_eigenvalue = 0.0;
};

// Assembled model pieces shared by the method dispatchers.
struct ScenarioModel {
  Matrix h_s;
  Matrix h_e;
  std::vector<CouplingTerm> coupling;
  Matrix h_tot;
  DensityMatrix rho_s0;
  DensityMatrix rho_e0;
  DensityMatrix rho_tot0;
  Index dim_s = 0;
  Index dim_e = 0;
};

ScenarioModel build_scenario_model(const Scenario& scenario);

// Runs one method over the scenario's grid.
MethodTrajectory run_method(const Scenario& scenario, const MethodConfig& method);

// The matching brute-force reference: eigendecomposition evolution, or the
// closed-form Milburn dephasing for Milburn methods.
MethodTrajectory run_reference(const Scenario& scenario, const MethodConfig& method);

struct RunResult {
  std::string trajectory_path;
  std::string summary_path;
  double max_oracle_distance = -1.0;       // -1 when the oracle is off
  double endpoint_oracle_distance = -1.0;
  std::vector<std::string> advisories;
};

// Executes the scenario end to end: runs the method (plus the oracle when
// enabled or forced), writes the trajectory CSV and summary JSON, and removes
// partial outputs on error. Wall time goes to stdout only, so the output
// files stay byte-deterministic.
RunResult run_scenario(const Scenario& scenario, const std::string& output_dir = "",
                       bool force_oracle = false, bool quiet = false);

}  // namespace oqdyn

#endif  // OQDYN_RUNNER_HPP

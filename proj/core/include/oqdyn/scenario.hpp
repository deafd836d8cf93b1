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

#ifndef OQDYN_SCENARIO_HPP
#define OQDYN_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oqdyn/models.hpp"
#include "oqdyn/sesr.hpp"
#include "oqdyn/types.hpp"

namespace oqdyn {

enum class ModelKind { zurek, extended, custom };

struct ModelSpecConfig {
  ModelKind kind = ModelKind::zurek;
  SpinBathSpec spins;  // zurek / extended
  // custom: matrices loaded from files at parse time
  Matrix h_s;
  Matrix h_e;
  std::vector<CouplingTerm> coupling;
  std::string h_s_file, h_e_file;
  std::vector<std::pair<std::string, std::string>> coupling_files;
};

enum class ScenarioCase { one, four, inherent };

struct InitialStateConfig {
  // Either a product of named single-qubit states (system + per-environment
  // qubit, or "thermal" for the whole environment), or an explicit total
  // density matrix file.
  bool from_file = false;
  std::string file;
  Matrix rho0;  // loaded at parse time when from_file
  std::string system_state = "plus";
  std::vector<std::string> env_states;
  bool env_thermal = false;
};

enum class MethodName {
  exact_series,
  improved_series,
  perturbed_master,
  improved_master,
  redfield,
  exact_master,
  milburn_closed,
  milburn_kraus,
  milburn_perturbative,
};

struct MethodConfig {
  MethodName name = MethodName::exact_series;
  int series_order = 4;           // L for exact_series
  int improved_energy_order = 4;  // E~ order for improved series / master
  int master_order_cap = 2;       // exact_master: total order in H1
  int master_depth = 1;           // exact_master: iterative depth N
  int kraus_kmax = -1;            // milburn_kraus: -1 selects the Poisson bound
  int milburn_lmax = 2;           // milburn_perturbative: path order cap
  int milburn_kmax = 8;           // milburn_perturbative: Kraus index cap
  bool j_interaction_picture = false;
};

std::string method_name_string(MethodName name);
MethodName method_name_from_string(const std::string& s);

struct Scenario {
  ModelSpecConfig model;
  ScenarioCase sesr_case = ScenarioCase::inherent;
  InitialStateConfig initial_state;
  MethodConfig method;
  std::optional<double> theta0;
  std::optional<double> beta_B;
  double t_start = 0.0;
  double t_end = 1.0;
  int n_steps = 1;
  double dt = -1.0;  // master stepper; < 0 selects min(0.01, 0.01/||H_tot||)
  bool oracle = false;
  std::string out_trajectory = "trajectory.csv";
  std::string out_summary = "summary.json";
  std::uint64_t seed = 0;
  Index dim_budget = kDefaultDimBudget;
  std::int64_t path_budget = kDefaultPathBudget;

  std::vector<double> time_grid() const;
};

// Parses and validates a scenario file. File references are resolved against
// the scenario's directory and must exist. Unknown keys are rejected with
// their JSON path.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_string(const std::string& text, const std::string& base_dir = ".");

// Serialization producing a document that reparses to an equal scenario.
std::string scenario_to_json_string(const Scenario& scenario);

// Loads a complex square matrix from the JSON layout {"rows": [[[re, im], ...], ...]}.
Matrix parse_matrix_file(const std::string& path);
std::string matrix_to_json_string(const Matrix& m);

}  // namespace oqdyn

#endif  // OQDYN_SCENARIO_HPP

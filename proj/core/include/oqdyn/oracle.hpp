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

#ifndef OQDYN_ORACLE_HPP
#define OQDYN_ORACLE_HPP

#include <string>
#include <vector>

#include "oqdyn/linalg.hpp"
#include "oqdyn/scenario.hpp"
#include "oqdyn/types.hpp"

namespace oqdyn {

// V exp(-i Lambda t) V^dagger rho0 V exp(i Lambda t) V^dagger. This path is
// eigendecomposition-based and shares no series logic with the propagator.
DensityMatrix exact_evolve(const Matrix& h, const DensityMatrix& rho0, double t,
                           Index dim_budget = kDefaultDimBudget);
DensityMatrix exact_evolve(const Eigh& h_eig, const DensityMatrix& rho0, double t);

struct ComparisonRow {
  double t = 0.0;
  double trace_dist = 0.0;
  double frobenius_dist = 0.0;
};

struct MethodComparison {
  std::string method;
  std::vector<ComparisonRow> rows;
  double max_trace_dist = 0.0;
  double endpoint_trace_dist = 0.0;
  double max_frobenius_dist = 0.0;
  double endpoint_frobenius_dist = 0.0;
};

struct ComparisonReport {
  std::vector<double> t_grid;
  std::vector<MethodComparison> methods;
};

// Distances of each trajectory against the reference on a shared grid.
ComparisonReport compare_trajectories(
    const std::vector<double>& t_grid,
    const std::vector<std::pair<std::string, std::vector<DensityMatrix>>>& trajectories,
    const std::vector<DensityMatrix>& reference);

// Runs every requested method of the scenario plus the matching oracle
// (eigendecomposition evolution, or the closed-form dephasing for Milburn
// methods) on the scenario's time grid.
ComparisonReport compare_methods(const Scenario& scenario,
                                 const std::vector<MethodConfig>& methods);

std::string comparison_report_csv(const ComparisonReport& report);
std::string comparison_report_json(const ComparisonReport& report);

}  // namespace oqdyn

#endif  // OQDYN_ORACLE_HPP

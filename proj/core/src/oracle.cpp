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

#include "oqdyn/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "oqdyn/runner.hpp"

namespace oqdyn {

DensityMatrix exact_evolve(const Matrix& h, const DensityMatrix& rho0, double t,
                           Index dim_budget) {
  if (h.rows() > dim_budget) {
    throw BudgetError("dimension budget exceeded: " + std::to_string(h.rows()) + " > " +
                      std::to_string(dim_budget));
  }
  return exact_evolve(hermitian_eigendecomposition(h), rho0, t);
}

DensityMatrix exact_evolve(const Eigh& h_eig, const DensityMatrix& rho0, double t) {
  const Index n = rho0.dim();
  if (h_eig.eigenvalues.size() != n) {
    throw DimensionError("exact_evolve: dimension mismatch");
  }
  Matrix w = h_eig.eigenvectors.adjoint() * rho0.op * h_eig.eigenvectors;
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      w(a, b) *= std::exp(Complex(0.0, -(h_eig.eigenvalues(a) - h_eig.eigenvalues(b)) * t));
    }
  }
  Matrix out = h_eig.eigenvectors * w * h_eig.eigenvectors.adjoint();
  return DensityMatrix(hermitize(out), rho0.tolerance);
}

ComparisonReport compare_trajectories(
    const std::vector<double>& t_grid,
    const std::vector<std::pair<std::string, std::vector<DensityMatrix>>>& trajectories,
    const std::vector<DensityMatrix>& reference) {
  if (reference.size() != t_grid.size()) {
    throw DimensionError("compare_trajectories: reference grid mismatch");
  }
  ComparisonReport report;
  report.t_grid = t_grid;
  for (const auto& [name, traj] : trajectories) {
    if (traj.size() != t_grid.size()) {
      throw DimensionError("compare_trajectories: trajectory '" + name + "' grid mismatch");
    }
    MethodComparison cmp;
    cmp.method = name;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      ComparisonRow row;
      row.t = t_grid[i];
      row.trace_dist = trace_distance(traj[i], reference[i]);
      row.frobenius_dist = (traj[i].op - reference[i].op).norm();
      cmp.max_trace_dist = std::max(cmp.max_trace_dist, row.trace_dist);
      cmp.max_frobenius_dist = std::max(cmp.max_frobenius_dist, row.frobenius_dist);
      cmp.rows.push_back(row);
    }
    if (!cmp.rows.empty()) {
      cmp.endpoint_trace_dist = cmp.rows.back().trace_dist;
      cmp.endpoint_frobenius_dist = cmp.rows.back().frobenius_dist;
    }
    report.methods.push_back(std::move(cmp));
  }
  return report;
}

ComparisonReport compare_methods(const Scenario& scenario,
                                 const std::vector<MethodConfig>& methods) {
  const std::vector<double> grid = scenario.time_grid();
  ComparisonReport empty;
  empty.t_grid = grid;
  if (methods.empty()) return empty;

  MethodTrajectory ref = run_reference(scenario, methods.front());
  std::vector<std::pair<std::string, std::vector<DensityMatrix>>> trajectories;
  for (const auto& method : methods) {
    Scenario variant = scenario;
    variant.method = method;
    MethodTrajectory traj = run_method(variant, method);
    trajectories.emplace_back(method_name_string(method.name), std::move(traj.rho_s));
  }
  return compare_trajectories(grid, trajectories, ref.rho_s);
}

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string comparison_report_csv(const ComparisonReport& report) {
  std::ostringstream out;
  out << "t";
  for (const auto& m : report.methods) {
    out << "," << m.method << "_trace_distance," << m.method << "_frobenius_distance";
  }
  out << "\n";
  for (std::size_t i = 0; i < report.t_grid.size(); ++i) {
    out << fmt17(report.t_grid[i]);
    for (const auto& m : report.methods) {
      out << "," << fmt17(m.rows[i].trace_dist) << "," << fmt17(m.rows[i].frobenius_dist);
    }
    out << "\n";
  }
  return out.str();
}

std::string comparison_report_json(const ComparisonReport& report) {
  nlohmann::ordered_json j;
  j["t_grid"] = report.t_grid;
  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (const auto& m : report.methods) {
    nlohmann::ordered_json entry;
    entry["method"] = m.method;
    entry["max_trace_distance"] = m.max_trace_dist;
    entry["endpoint_trace_distance"] = m.endpoint_trace_dist;
    entry["max_frobenius_distance"] = m.max_frobenius_dist;
    entry["endpoint_frobenius_distance"] = m.endpoint_frobenius_dist;
    methods.push_back(entry);
  }
  j["methods"] = methods;
  return j.dump(2) + "\n";
}

}  // namespace oqdyn

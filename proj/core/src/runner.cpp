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

#include "oqdyn/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "json.hpp"
#include "oqdyn/linalg.hpp"
#include "oqdyn/master.hpp"
#include "oqdyn/milburn.hpp"
#include "oqdyn/models.hpp"
#include "oqdyn/oracle.hpp"
#include "oqdyn/propagator.hpp"

namespace oqdyn {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

Matrix named_qubit_state(const std::string& name) {
  Matrix rho = Matrix::Zero(2, 2);
  const Complex half(0.5, 0.0);
  if (name == "zero") {
    rho(0, 0) = 1.0;
  } else if (name == "one") {
    rho(1, 1) = 1.0;
  } else if (name == "plus") {
    rho << half, half, half, half;
  } else if (name == "minus") {
    rho << half, -half, -half, half;
  } else if (name == "plus_i") {
    rho << half, Complex(0.0, -0.5), Complex(0.0, 0.5), half;
  } else if (name == "minus_i") {
    rho << half, Complex(0.0, 0.5), Complex(0.0, -0.5), half;
  } else if (name == "mixed") {
    rho << half, 0, 0, half;
  } else {
    throw ValidationError("unknown named state '" + name + "'");
  }
  return rho;
}

}  // namespace

ScenarioModel build_scenario_model(const Scenario& s) {
  ScenarioModel out;
  if (s.model.kind == ModelKind::custom) {
    out.h_s = s.model.h_s;
    out.h_e = s.model.h_e;
    out.coupling = s.model.coupling;
  } else {
    s.model.spins.validate();
    out.h_e = Matrix::Zero(s.model.spins.dim_e(), s.model.spins.dim_e());
    if (s.model.kind == ModelKind::zurek) {
      out.h_s = Matrix::Zero(2, 2);
      out.coupling.push_back({pauli_z(), env_operator_z(s.model.spins)});
    } else {
      out.h_s = s.model.spins.mu * pauli_x();
      out.coupling.push_back(
          {pauli_z(), env_operator_z(s.model.spins) + env_operator_x(s.model.spins)});
    }
  }
  out.dim_s = out.h_s.rows();
  out.dim_e = out.h_e.rows();

  out.h_tot = tensor_product(out.h_s, identity(out.dim_e), s.dim_budget) +
              tensor_product(identity(out.dim_s), out.h_e, s.dim_budget);
  for (const auto& term : out.coupling) {
    out.h_tot += tensor_product(term.system_op, term.env_op, s.dim_budget);
  }

  if (s.initial_state.from_file) {
    out.rho_tot0 = DensityMatrix(s.initial_state.rho0);
    out.rho_tot0.validate();
    out.rho_s0 = partial_trace_env(out.rho_tot0, out.dim_s, out.dim_e);
    // The environment marginal is only used by master methods, which require
    // a factorized product; those reject file-based states at parse time.
    out.rho_e0 = DensityMatrix(identity(out.dim_e) / static_cast<double>(out.dim_e));
  } else {
    out.rho_s0 = DensityMatrix(named_qubit_state(s.initial_state.system_state));
    if (s.initial_state.env_thermal) {
      out.rho_e0 = thermal_state(out.h_e, ThermalParams{s.beta_B.value_or(0.0)});
    } else {
      Matrix env = Matrix::Identity(1, 1);
      for (const auto& name : s.initial_state.env_states) {
        env = tensor_product(env, named_qubit_state(name), s.dim_budget);
      }
      out.rho_e0 = DensityMatrix(env);
    }
    out.rho_tot0 =
        DensityMatrix(tensor_product(out.rho_s0.op, out.rho_e0.op, s.dim_budget));
  }
  return out;
}

namespace {

struct SeriesSetup {
  SesrBasis basis;
  PerturbationData pert;
  Matrix h1_sesr;          // split.h_tot1 expressed in the SESR
  HamiltonianSplit split;
};

// Builds the SESR pipeline for series methods: the case split for the
// extended model, the inherent split (plus redivision and degenerate-subspace
// handling for the improved route) otherwise.
SeriesSetup build_series_setup(const Scenario& s, const ScenarioModel& model, bool improved,
                               int improved_energy_order) {
  SeriesSetup setup;
  if (s.model.kind == ModelKind::extended) {
    const SesrCase c = s.sesr_case == ScenarioCase::one ? SesrCase::one : SesrCase::four;
    CaseSesr cs = sesr_for_case(s.model.spins, c);
    setup.split = std::move(cs.split);
    setup.basis = std::move(cs.basis);
    setup.pert = std::move(cs.pert);
  } else {
    HamiltonianSplit split;
    split.h_s0 = model.h_s;
    split.h_e0 = model.h_e;
    split.h_tot1 = Matrix::Zero(model.h_tot.rows(), model.h_tot.cols());
    for (const auto& term : model.coupling) {
      split.h_tot1 += tensor_product(term.system_op, term.env_op, s.dim_budget);
    }
    setup.basis = build_sesr(split);
    setup.pert = perturbation_matrix(split.h_tot1, setup.basis);
    setup.split = std::move(split);
    if (improved) {
      RedivisionResult redivided =
          hamiltonian_redivision(setup.split, setup.basis, setup.pert);
      setup.split = std::move(redivided.split);
      setup.basis = std::move(redivided.basis);
      setup.pert = std::move(redivided.pert);
      auto [basis2, pert2] = diagonalize_degenerate_subspaces(
          setup.basis, setup.pert, default_gap_tol(setup.basis.energies));
      setup.basis = std::move(basis2);
      setup.pert = std::move(pert2);
      if (setup.pert.h1_diag.cwiseAbs().maxCoeff() > 0.0) {
        // Absorb any diagonal produced by the degenerate rotations.
        setup.basis.energies += setup.pert.h1_diag;
        setup.pert.h1_diag.setZero();
      }
    }
  }
  setup.h1_sesr = hermitize(setup.basis.basis_change.adjoint() * setup.split.h_tot1 *
                            setup.basis.basis_change);
  if (improved) {
    if (improved_energy_order >= 2) {
      setup.pert.improved_energies =
          improved_energies(setup.pert, setup.basis.energies, improved_energy_order);
    } else {
      setup.pert.improved_energies = setup.basis.energies + setup.pert.h1_diag;
    }
    setup.pert.improved_order = improved_energy_order;
  }
  return setup;
}

MethodTrajectory series_trajectory(const Scenario& s, const ScenarioModel& model,
                                   const MethodConfig& method) {
  const bool improved = method.name == MethodName::improved_series;
  SeriesSetup setup = build_series_setup(s, model, improved, method.improved_energy_order);
  SeriesConfig cfg;
  cfg.max_order_exact = method.series_order;
  cfg.improved = improved;
  cfg.improved_energy_order = method.improved_energy_order;
  cfg.path_budget = s.path_budget;

  MethodTrajectory out;
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (double t : s.time_grid()) {
    double defect = 0.0;
    DensityMatrix rho =
        evolve_reduced(model.rho_tot0, t, setup.basis, setup.h1_sesr, cfg,
                       improved ? &setup.pert : nullptr, &defect);
    out.max_hermiticity_defect = std::max(out.max_hermiticity_defect, defect);
    out.max_trace_drift =
        std::max(out.max_trace_drift, std::abs(rho.op.trace() - Complex(1.0, 0.0)));
    out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(rho.op));
    out.t.push_back(t);
    out.rho_s.push_back(std::move(rho));
  }
  return out;
}

MethodTrajectory master_trajectory(const Scenario& s, const ScenarioModel& model,
                                   const MethodConfig& method) {
  MasterConfig mcfg;
  mcfg.dt = s.dt;
  mcfg.improved_energy_order = method.improved_energy_order;
  mcfg.j_interaction_picture = method.j_interaction_picture;
  mcfg.exact_order_cap = method.master_order_cap;
  mcfg.exact_depth = method.master_depth;
  switch (method.name) {
    case MethodName::improved_master:
      mcfg.truncation = MasterTruncation::improved_second_order;
      break;
    case MethodName::exact_master:
      mcfg.truncation = MasterTruncation::exact_truncated;
      break;
    default:
      mcfg.truncation = MasterTruncation::second_order;
      break;
  }
  FactorizedInitialState init{model.rho_s0, model.rho_e0};
  MasterModel master(model.h_s, model.h_e, model.coupling, init, mcfg, s.dim_budget);
  const double h_norm = model.h_tot.norm();

  RhsFunction rhs;
  switch (method.name) {
    case MethodName::perturbed_master:
      rhs = [&master](double t, const DensityMatrix& rho) {
        return rhs_perturbed(rho, t, master);
      };
      break;
    case MethodName::improved_master:
      rhs = [&master](double t, const DensityMatrix& rho) {
        return rhs_improved(rho, t, master);
      };
      break;
    case MethodName::redfield:
      rhs = [&master](double t, const DensityMatrix& rho) {
        return rhs_redfield(rho, t, master);
      };
      break;
    case MethodName::exact_master:
      rhs = [&master](double t, const DensityMatrix& rho) {
        return rhs_exact_truncated(rho, t, master);
      };
      break;
    default:
      throw Error("master_trajectory: not a master method");
  }

  std::vector<double> grid = s.time_grid();
  bool prepended = false;
  if (grid.front() > 0.0) {
    grid.insert(grid.begin(), 0.0);
    prepended = true;
  } else if (grid.front() < 0.0) {
    throw ValidationError("master methods integrate forward from t = 0");
  }
  auto points = integrate(rhs, model.rho_s0, grid, mcfg, h_norm);
  if (prepended) points.erase(points.begin());

  MethodTrajectory out;
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  const bool interaction_picture = method.name == MethodName::redfield;
  for (auto& point : points) {
    DensityMatrix rho = std::move(point.rho);
    if (interaction_picture) {
      // Transform back to the Schroedinger picture.
      const Eigh& sys = master.system_eig();
      Vector phases(model.dim_s);
      for (Index i = 0; i < model.dim_s; ++i) {
        phases(i) = std::exp(Complex(0.0, -sys.eigenvalues(i) * point.t));
      }
      Matrix u_t = sys.eigenvectors * phases.asDiagonal() * sys.eigenvectors.adjoint();
      rho = DensityMatrix(hermitize(u_t * rho.op * u_t.adjoint()), rho.tolerance);
    }
    out.max_trace_drift = std::max(out.max_trace_drift, point.trace_drift);
    out.min_eigenvalue = std::min(out.min_eigenvalue, point.min_eigenvalue);
    out.t.push_back(point.t);
    out.rho_s.push_back(std::move(rho));
  }
  return out;
}

MethodTrajectory milburn_trajectory(const Scenario& s, const ScenarioModel& model,
                                    const MethodConfig& method) {
  MilburnParams params;
  params.theta0 = s.theta0.value_or(0.0);
  MethodTrajectory out;
  out.min_eigenvalue = std::numeric_limits<double>::infinity();

  if (method.name == MethodName::milburn_perturbative) {
    SeriesSetup setup = build_series_setup(s, model, /*improved=*/false, 1);
    SeriesConfig cfg;
    cfg.path_budget = s.path_budget;
    for (double t : s.time_grid()) {
      DensityMatrix rho =
          milburn_perturbative_reduced(model.rho_tot0, t, setup.basis, setup.h1_sesr,
                                       params, method.milburn_kmax, method.milburn_lmax, cfg);
      out.max_trace_drift =
          std::max(out.max_trace_drift, std::abs(rho.op.trace() - Complex(1.0, 0.0)));
      out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(rho.op));
      out.t.push_back(t);
      out.rho_s.push_back(std::move(rho));
    }
    return out;
  }

  const Eigh h_eig = hermitian_eigendecomposition(model.h_tot);
  for (double t : s.time_grid()) {
    DensityMatrix total = method.name == MethodName::milburn_closed
                              ? milburn_evolve_closed_form(model.rho_tot0, t, h_eig, params)
                              : milburn_evolve_kraus(model.rho_tot0, t, model.h_tot, params,
                                                     method.kraus_kmax);
    DensityMatrix rho = partial_trace_env(total, model.dim_s, model.dim_e);
    out.max_trace_drift =
        std::max(out.max_trace_drift, std::abs(rho.op.trace() - Complex(1.0, 0.0)));
    out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(rho.op));
    out.t.push_back(t);
    out.rho_s.push_back(std::move(rho));
  }
  return out;
}

}  // namespace

MethodTrajectory run_method(const Scenario& s, const MethodConfig& method) {
  const ScenarioModel model = build_scenario_model(s);
  switch (method.name) {
    case MethodName::exact_series:
    case MethodName::improved_series:
      return series_trajectory(s, model, method);
    case MethodName::perturbed_master:
    case MethodName::improved_master:
    case MethodName::redfield:
    case MethodName::exact_master:
      return master_trajectory(s, model, method);
    case MethodName::milburn_closed:
    case MethodName::milburn_kraus:
    case MethodName::milburn_perturbative:
      return milburn_trajectory(s, model, method);
  }
  throw Error("run_method: unreachable");
}

MethodTrajectory run_reference(const Scenario& s, const MethodConfig& method) {
  const ScenarioModel model = build_scenario_model(s);
  const bool milburn = method.name == MethodName::milburn_closed ||
                       method.name == MethodName::milburn_kraus ||
                       method.name == MethodName::milburn_perturbative;
  const Eigh h_eig = hermitian_eigendecomposition(model.h_tot);
  MilburnParams params;
  params.theta0 = s.theta0.value_or(0.0);

  MethodTrajectory out;
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (double t : s.time_grid()) {
    DensityMatrix total = milburn ? milburn_evolve_closed_form(model.rho_tot0, t, h_eig, params)
                                  : exact_evolve(h_eig, model.rho_tot0, t);
    DensityMatrix rho = partial_trace_env(total, model.dim_s, model.dim_e);
    out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(rho.op));
    out.t.push_back(t);
    out.rho_s.push_back(std::move(rho));
  }
  return out;
}

namespace {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_trajectory_csv(const std::string& path, const MethodTrajectory& traj,
                          const std::vector<double>* distances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file " + path);
  const Index d = traj.rho_s.empty() ? 0 : traj.rho_s.front().dim();
  out << "t";
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      out << ",re_" << i << "_" << j << ",im_" << i << "_" << j;
    }
  }
  out << ",trace,purity";
  if (distances) out << ",oracle_trace_distance";
  out << "\n";
  for (std::size_t r = 0; r < traj.t.size(); ++r) {
    out << format_double(traj.t[r]);
    const Matrix& rho = traj.rho_s[r].op;
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) {
        out << "," << format_double(rho(i, j).real()) << ","
            << format_double(rho(i, j).imag());
      }
    }
    out << "," << format_double(rho.trace().real()) << "," << format_double(purity(rho));
    if (distances) out << "," << format_double((*distances)[r]);
    out << "\n";
  }
  if (!out) throw Error("failed writing output file " + path);
}

std::vector<std::string> collect_advisories(const Scenario& s) {
  std::vector<std::string> advisories;
  if (s.model.kind != ModelKind::extended) return advisories;
  double max_y = 0.0, min_y = std::numeric_limits<double>::infinity();
  for (int k = 0; k < s.model.spins.n_env; ++k) {
    max_y = std::max(max_y, s.model.spins.y(k));
    min_y = std::min(min_y, s.model.spins.y(k));
  }
  const double mu = std::abs(s.model.spins.mu);
  if (s.sesr_case == ScenarioCase::one && mu < 2.0 * max_y) {
    advisories.push_back("case one assumes a strong transverse field: |mu| = " +
                         format_double(mu) + " is below 2*max(Y_k) = " +
                         format_double(2.0 * max_y));
  }
  if (s.sesr_case == ScenarioCase::four && 2.0 * mu > min_y) {
    advisories.push_back("case four assumes a weak transverse field: 2*|mu| = " +
                         format_double(2.0 * mu) + " exceeds min(Y_k) = " +
                         format_double(min_y));
  }
  return advisories;
}

ordered_json model_report(const Scenario& s) {
  ordered_json report;
  if (s.model.kind != ModelKind::extended || s.sesr_case == ScenarioCase::inherent) {
    return report;
  }
  const SesrCase c = s.sesr_case == ScenarioCase::one ? SesrCase::one : SesrCase::four;
  ordered_json levels = ordered_json::array();
  const Index de = s.model.spins.dim_e();
  for (int ns = 0; ns < 2; ++ns) {
    for (std::uint32_t e = 0; e < static_cast<std::uint32_t>(de); ++e) {
      ordered_json level;
      level["n_s"] = ns;
      level["env_bits"] = e;
      try {
        const double g_sum = improved_energy_case(s.model.spins, c, ns, e);
        const double bracket = printed_bracket_energy(s.model.spins, c, ns, e);
        level["improved_energy"] = g_sum;
        level["printed_bracket_energy"] = bracket;
        level["bracket_discrepancy"] = g_sum - bracket;
      } catch (const Error&) {
        level["improved_energy"] = nullptr;
        level["printed_bracket_energy"] = nullptr;
      }
      levels.push_back(level);
    }
  }
  report["improved_energies"] = levels;
  return report;
}

}  // namespace

RunResult run_scenario(const Scenario& s, const std::string& output_dir, bool force_oracle,
                       bool quiet) {
  const auto start_time = std::chrono::steady_clock::now();
  fs::path dir = output_dir.empty() ? fs::path(".") : fs::path(output_dir);
  if (!output_dir.empty()) fs::create_directories(dir);
  const std::string traj_path = (dir / s.out_trajectory).string();
  const std::string summary_path = (dir / s.out_summary).string();

  RunResult result;
  result.trajectory_path = traj_path;
  result.summary_path = summary_path;
  std::vector<std::string> written;
  try {
    const bool with_oracle = s.oracle || force_oracle;
    MethodTrajectory traj = run_method(s, s.method);

    std::vector<double> distances;
    if (with_oracle) {
      MethodTrajectory ref = run_reference(s, s.method);
      distances.resize(traj.t.size());
      for (std::size_t i = 0; i < traj.t.size(); ++i) {
        distances[i] = trace_distance(traj.rho_s[i], ref.rho_s[i]);
      }
      result.max_oracle_distance = 0.0;
      for (double dval : distances) {
        result.max_oracle_distance = std::max(result.max_oracle_distance, dval);
      }
      result.endpoint_oracle_distance = distances.empty() ? 0.0 : distances.back();
    }
    result.advisories = collect_advisories(s);

    write_trajectory_csv(traj_path, traj, with_oracle ? &distances : nullptr);
    written.push_back(traj_path);

    ordered_json summary;
    summary["scenario"] = ordered_json::parse(scenario_to_json_string(s));
    summary["method"] = method_name_string(s.method.name);
    ordered_json trunc;
    switch (s.method.name) {
      case MethodName::exact_series:
        trunc["L"] = s.method.series_order;
        break;
      case MethodName::improved_series:
        trunc["kl_cap"] = 3;
        trunc["improved_energy_order"] = s.method.improved_energy_order;
        break;
      case MethodName::exact_master:
        trunc["order_cap"] = s.method.master_order_cap;
        trunc["depth"] = s.method.master_depth;
        break;
      case MethodName::milburn_kraus:
        trunc["kraus_kmax"] = s.method.kraus_kmax;
        break;
      case MethodName::milburn_perturbative:
        trunc["kraus_kmax"] = s.method.milburn_kmax;
        trunc["path_order"] = s.method.milburn_lmax;
        break;
      default:
        break;
    }
    summary["truncation"] = trunc;
    summary["rows"] = traj.t.size();
    ordered_json diagnostics;
    diagnostics["max_trace_drift"] = traj.max_trace_drift;
    diagnostics["max_hermiticity_defect"] = traj.max_hermiticity_defect;
    diagnostics["min_eigenvalue"] = traj.min_eigenvalue;
    summary["diagnostics"] = diagnostics;
    ordered_json oracle_block;
    oracle_block["enabled"] = with_oracle;
    if (with_oracle) {
      oracle_block["max_trace_distance"] = result.max_oracle_distance;
      oracle_block["endpoint_trace_distance"] = result.endpoint_oracle_distance;
    }
    summary["oracle"] = oracle_block;
    summary["advisories"] = result.advisories;
    const ordered_json report = model_report(s);
    if (!report.is_null() && !report.empty()) summary["model_report"] = report;
    summary["outputs"] = ordered_json{{"trajectory", s.out_trajectory}};

    std::ofstream out(summary_path, std::ios::binary);
    if (!out) throw Error("cannot open output file " + summary_path);
    out << summary.dump(2) << "\n";
    if (!out) throw Error("failed writing output file " + summary_path);
    written.push_back(summary_path);
  } catch (...) {
    for (const auto& file : written) {
      std::error_code ec;
      fs::remove(file, ec);
    }
    std::error_code ec;
    fs::remove(traj_path, ec);
    fs::remove(summary_path, ec);
    throw;
  }

  if (!quiet) {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start_time)
                             .count();
    std::cout << "wrote " << traj_path << " and " << summary_path << " (wall time " << elapsed
              << " ms)\n";
  }
  return result;
}

}  // namespace oqdyn

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

#ifndef OQDYN_MASTER_HPP
#define OQDYN_MASTER_HPP

#include <functional>
#include <utility>
#include <vector>

#include "oqdyn/linalg.hpp"
#include "oqdyn/sesr.hpp"
#include "oqdyn/types.hpp"

namespace oqdyn {

struct FactorizedInitialState {
  DensityMatrix rho_s0;
  DensityMatrix rho_e0;

  DensityMatrix rho_tot(Index dim_budget = kDefaultDimBudget) const;
};

enum class EnvSideKind { left, right };

// A_EL^(k)(t, beta, beta') / A_ER^(l)(-t, gamma, gamma') of the master-equation
// machinery: environment-space matrices extracted from the series terms.
struct EnvSideOperator {
  EnvSideKind kind = EnvSideKind::left;
  int order = 0;
  Index beta = 0;
  Index beta_prime = 0;
  Matrix matrix;  // environment space
  double time = 0.0;
};

enum class MasterTruncation { second_order, improved_second_order, exact_truncated };

struct MasterConfig {
  MasterTruncation truncation = MasterTruncation::second_order;
  int exact_order_cap = 2;  // exact_truncated: total order in H_tot1
  int exact_depth = 1;      // exact_truncated: iterative depth N
  double dt = -1.0;         // < 0 selects min(0.01, 0.01 / ||H_tot||)
  bool assume_app1 = false;
  bool j_interaction_picture = false;  // S_m(t) variant in J(t)
  int improved_energy_order = 4;
};

struct ThermalParams {
  double beta_B = 0.0;  // inverse temperature
};

// rho_E = exp(-beta h_E) / Tr exp(-beta h_E), computed in the h_E eigenbasis
// with a max-eigenvalue shift.
DensityMatrix thermal_state(const Matrix& h_e, const ThermalParams& params);

// Precomputed inherent-SESR data for the master-equation right-hand sides:
// H_tot0 = H_S + H_E, H_tot1 = H_SE = sum_m S_m (x) B_m, factorizing initial
// state, and the redivided quantities for the improved variant.
class MasterModel {
 public:
  MasterModel(Matrix h_s, Matrix h_e, std::vector<CouplingTerm> coupling,
              FactorizedInitialState init, MasterConfig cfg = {},
              Index dim_budget = kDefaultDimBudget);

  Index dim_s() const { return h_s_.rows(); }
  Index dim_e() const { return h_e_.rows(); }
  Index dim() const { return dim_s() * dim_e(); }

  const Matrix& h_s() const { return h_s_; }
  const Matrix& h_e() const { return h_e_; }
  const std::vector<CouplingTerm>& coupling() const { return coupling_; }
  const FactorizedInitialState& initial_state() const { return init_; }
  const MasterConfig& config() const { return cfg_; }
  const RealVector& energies() const { return energies_; }
  const RealVector& energies_prime() const { return energies_prime_; }
  const RealVector& improved_energy_values() const { return improved_; }
  const Eigh& system_eig() const { return sys_; }
  const Eigh& env_eig() const { return env_; }
  const Matrix& h_se_isesr() const { return h_se_; }
  const Matrix& rho_env_tilde() const { return rho_e_tilde_; }
  const Matrix& rho_sys_tilde() const { return rho_s_tilde_; }
  Matrix h_tot() const;

  // varrho_E(t) = e^{-i h_E t} rho_E(0) e^{+i h_E t} in the omega eigenbasis.
  Matrix varrho_env(double t) const;
  // J(t) = sum_m S_m Tr_E(B_m varrho_E(t)) in the psi eigenbasis.
  Matrix j_operator(double t) const;
  // ||Tr_E [H~_SE(t), rho_tot(0)]||_F, the assumption behind the Redfield form.
  double app1_defect(double t) const;

  // A_k(t) of the exact series in the inherent SESR (full H_SE matrix).
  Matrix series_term(int k, double t) const;
  // A_Ik(t), k in {0, 1}, built from the redivided H'_tot1.
  Matrix improved_series_term(int k, double t) const;

  Matrix to_system_eigenbasis(const Matrix& rho_computational) const;
  Matrix from_system_eigenbasis(const Matrix& rho_eigen) const;

 private:
  Matrix h_s_, h_e_;
  std::vector<CouplingTerm> coupling_;
  FactorizedInitialState init_;
  MasterConfig cfg_;
  Index dim_budget_;

  Eigh sys_, env_;
  RealVector energies_;      // E_p = E_gamma + eps_v, flat
  Matrix h_se_;              // H_SE in the inherent SESR
  RealVector h1_diag_;       // diagonal of h_se_
  Matrix g1_;                // off-diagonal part
  RealVector energies_prime_;  // E' = E + h1_diag
  RealVector improved_;        // E~ at cfg.improved_energy_order
  Matrix rho_e_tilde_;       // rho_E(0) in the omega basis
  Matrix rho_s_tilde_;       // rho_S(0) in the psi basis
};

// A_EL^(k) / A_ER^(l) per their trace definitions; diagnostic surface used by
// the coefficient oracle tests.
EnvSideOperator env_side_operator(EnvSideKind kind, int order, double t, Index beta,
                                  Index beta_prime, const MasterModel& model);

// C^{m,kl}_{bb',gg'}(t) = Tr_E[B_m A_EL^(k) varrho_E(t) A_ER^(l)].
Complex coefficient_C(int m, int k, int l, double t, Index beta, Index beta_prime,
                      Index gamma, Index gamma_prime, const MasterModel& model);
// K^{kl} drops the B_m factor.
Complex coefficient_K(int k, int l, double t, Index beta, Index beta_prime, Index gamma,
                      Index gamma_prime, const MasterModel& model);

// Second-order perturbed master equation right-hand side (Schroedinger
// picture, computational basis in and out).
Matrix rhs_perturbed(const DensityMatrix& rho_s, double t, const MasterModel& model);

// Its app1-reduced form: the J(t) terms dropped.
Matrix rhs_perturbed_app1(const DensityMatrix& rho_s, double t, const MasterModel& model);

// Improved second-order right-hand side built from the redivided A_I terms.
Matrix rhs_improved(const DensityMatrix& rho_s, double t, const MasterModel& model);

// Redfield right-hand side in the interaction picture, with the tau-integral
// in closed form per matrix element. Throws when the app1 check fails.
Matrix rhs_redfield(const DensityMatrix& rho_s_interaction, double t,
                    const MasterModel& model);

// The terms dropped by the app1 assumption, for quantifying their size.
Matrix dropped_terms_app1(const DensityMatrix& rho_s, double t, const MasterModel& model);

// Right-hand side of the all-order master equation truncated to a total
// perturbation order cap and iterative depth N (both from model.config()).
Matrix rhs_exact_truncated(const DensityMatrix& rho_s, double t, const MasterModel& model);

using RhsFunction = std::function<Matrix(double, const DensityMatrix&)>;

struct TrajectoryPoint {
  double t = 0.0;
  DensityMatrix rho;
  double trace_drift = 0.0;
  double min_eigenvalue = 0.0;
};

// Fixed-step classical Runge-Kutta advance over the grid, symmetrizing after
// every step. Trace renormalization is off; the drift is reported instead.
std::vector<TrajectoryPoint> integrate(const RhsFunction& rhs, const DensityMatrix& rho0,
                                       const std::vector<double>& t_grid,
                                       const MasterConfig& cfg, double h_tot_norm = 1.0);

}  // namespace oqdyn

#endif  // OQDYN_MASTER_HPP

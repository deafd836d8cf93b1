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

#ifndef OQDYN_MODELS_HPP
#define OQDYN_MODELS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "oqdyn/sesr.hpp"
#include "oqdyn/types.hpp"

namespace oqdyn {

// A two-level system coupled through sigma_z to a bath of N_E spins with
// sigma_z couplings Z_k, optional transverse couplings X_k, and a system
// transverse field mu. Environment qubit 1 is the most significant bit of the
// flat environment index.
struct SpinBathSpec {
  int n_env = 1;
  RealVector z;
  RealVector x;
  double mu = 0.0;
  Index dim_budget = kDefaultDimBudget;

  Index dim_e() const { return Index{1} << n_env; }
  Index dim() const { return 2 * dim_e(); }
  double y(int k) const;  // sqrt(X_k^2 + Z_k^2)
  int bit(std::uint32_t env_bits, int k) const;  // n_k of qubit k (1-based)
  void validate(bool require_y_positive = false) const;
};

enum class SesrCase { one, four };

struct NaturalLabel {
  int n_s = 0;
  std::uint32_t env_bits = 0;
  std::string to_string() const;
};

struct ZurekModel {
  Matrix h_tot;
  std::vector<NaturalLabel> labels;  // flat order
  RealVector energies;               // (-1)^{n_s} sum_k (-1)^{n_k} Z_k
};

// H = sigma_z (x) B_zE; requires mu == 0 and X == 0.
ZurekModel build_zurek(const SpinBathSpec& spec);

// rho(t) = exp(-i H_Zurek t) rho(0) exp(i H_Zurek t), a diagonal phase stamp
// in the natural basis.
DensityMatrix zurek_exact_solution(const DensityMatrix& rho0, double t,
                                   const SpinBathSpec& spec);

// H = mu sigma_x (x) I + sigma_z (x) (B_xE + B_zE).
Matrix build_extended(const SpinBathSpec& spec);

Matrix env_operator_z(const SpinBathSpec& spec);  // B_zE
Matrix env_operator_x(const SpinBathSpec& spec);  // B_xE

// f_{n_E} = sum_k (-1)^{n_k} Y_k.
double f_env(const SpinBathSpec& spec, std::uint32_t env_bits);

struct CaseSesr {
  HamiltonianSplit split;
  SesrBasis basis;
  PerturbationData pert;
};

// Case one: H_tot0 = mu sigma_x (x) I with the psi (x) chi product basis and
// g1 = f_{m_E} on system-flip, environment-diagonal entries.
// Case four: the redivided split H_tot0' = sigma_z (x) (B_xE + B_zE) with the
// natural (x) chi basis, E' = (-1)^{n_s} f_{n_E} and g1 = mu on system flips.
CaseSesr sesr_for_case(const SpinBathSpec& spec, SesrCase sesr_case);

// E~ from the G-sum values: case one (-1)^{n_s} (mu + f^2/2mu - f^4/8mu^3),
// case four the mu <-> f exchange of the same expression.
double improved_energy_case(const SpinBathSpec& spec, SesrCase sesr_case, int n_s,
                            std::uint32_t env_bits);

// The compact bracketed closed form printed alongside the case energies. It
// disagrees with the G-sum values; both are reported so the discrepancy is
// visible in model reports.
double printed_bracket_energy(const SpinBathSpec& spec, SesrCase sesr_case, int n_s,
                              std::uint32_t env_bits);

// Order-o (o in {0,1,2}) contribution to the total density matrix of the
// case-one improved solution, expressed in the case-one SESR basis.
Matrix case_one_density_orders(const DensityMatrix& rho0_tot, double t,
                               const SpinBathSpec& spec, int order);

}  // namespace oqdyn

#endif  // OQDYN_MODELS_HPP

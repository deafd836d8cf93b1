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

#ifndef OQDYN_PROPAGATOR_HPP
#define OQDYN_PROPAGATOR_HPP

#include "oqdyn/divided_difference.hpp"
#include "oqdyn/sesr.hpp"
#include "oqdyn/types.hpp"

namespace oqdyn {

struct SeriesConfig {
  int max_order_exact = 4;          // L, capped at 6 (cost grows like D^{L+1})
  bool improved = false;
  int improved_energy_order = 4;    // order of E~ used in the improved phases, in [1,5]
  std::int64_t path_budget = kDefaultPathBudget;
  double confluence_tol = -1.0;     // < 0 selects 1e-8 * max|E|
};

struct PropagatorTerm {
  int order = 0;
  Matrix matrix;  // A_l(t) in the SESR
  double time = 0.0;
};

// l-th exact series term: A_l(t)^{p,q} = sum over length-l label paths of the
// divided difference of exp(-i x t) over the path energies times the product
// of H_tot1 matrix elements along the path. A_0(t) = diag(exp(-i E t)).
// Uses the full H_tot1 matrix in the SESR, diagonal included.
PropagatorTerm exact_term(int l, const SesrBasis& basis, const Matrix& h1_full, double t,
                          const SeriesConfig& cfg);

// Improved terms A_I0..A_I3: unperturbed denominators, phases exp(-i E~ t).
// Requires redivision (h1_diag == 0) and vanishing degenerate off-diagonals.
PropagatorTerm improved_term(int l, const SesrBasis& basis, const PerturbationData& pert,
                             double t, const SeriesConfig& cfg);

// rho_tot(t) = sum_{k,l <= L} A_k rho A_l^dagger (exact mode) or the k+l <= 3
// improved assembly. Input and output are in the computational basis; the
// result is symmetrized, with the pre-symmetrization defect reported.
DensityMatrix evolve_total(const DensityMatrix& rho0, double t, const SesrBasis& basis,
                           const Matrix& h1_full, const SeriesConfig& cfg,
                           const PerturbationData* pert = nullptr,
                           double* hermiticity_defect_out = nullptr);

DensityMatrix evolve_reduced(const DensityMatrix& rho0, double t, const SesrBasis& basis,
                             const Matrix& h1_full, const SeriesConfig& cfg,
                             const PerturbationData* pert = nullptr,
                             double* hermiticity_defect_out = nullptr);

}  // namespace oqdyn

#endif  // OQDYN_PROPAGATOR_HPP

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

#ifndef OQDYN_LINALG_HPP
#define OQDYN_LINALG_HPP

#include "oqdyn/types.hpp"

namespace oqdyn {

// Kronecker product under the flat = gamma * dim_e + v convention (left
// factor slow). Throws BudgetError when the result dimension exceeds budget.
Matrix tensor_product(const Matrix& a, const Matrix& b, Index dim_budget = kDefaultDimBudget);

// Partial trace over the environment factor: rho_s(g, g') = sum_v rho((g,v), (g',v)).
Matrix partial_trace_env(const Matrix& rho_tot, Index dim_s, Index dim_e);
DensityMatrix partial_trace_env(const DensityMatrix& rho_tot, Index dim_s, Index dim_e);

struct Eigh {
  RealVector eigenvalues;  // ascending
  Matrix eigenvectors;     // columns, orthonormal, deterministic tie-break
};

// Hermitian eigendecomposition with a reproducible basis: eigenvalues
// ascending; within a numerically degenerate cluster (gap < 1e-9 * spectral
// width) columns are ordered by descending magnitude of their first nonzero
// component and phase-fixed so that component is real positive.
// Throws NumericsError if h is not hermitian within `hermiticity_tol`.
Eigh hermitian_eigendecomposition(const Matrix& h, double hermiticity_tol = 1e-10);

// 0.5 * sum of singular values of (a - b).
double trace_distance(const Matrix& a, const Matrix& b);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// Convenience helpers used across modules.
Matrix identity(Index dim);
Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix commutator(const Matrix& a, const Matrix& b);
Matrix hermitize(const Matrix& m);  // (m + m^dagger) / 2
bool is_hermitian(const Matrix& m, double tol);
bool is_finite(const Matrix& m);
double hermiticity_defect(const Matrix& m);  // max |m - m^dagger|
double purity(const Matrix& rho);            // Re tr(rho^2)
double min_eigenvalue(const Matrix& hermitian);

// Projector |ket><ket| for a computational basis state.
Matrix basis_projector(Index dim, Index k);

}  // namespace oqdyn

#endif  // OQDYN_LINALG_HPP

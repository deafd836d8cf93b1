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

#ifndef OQDYN_SESR_HPP
#define OQDYN_SESR_HPP

#include <utility>
#include <vector>

#include "oqdyn/linalg.hpp"
#include "oqdyn/types.hpp"

namespace oqdyn {

// One S (x) B term of the coupling included in the solvable part.
struct CouplingTerm {
  Matrix system_op;
  Matrix env_op;
};

struct CouplingDecomposition {
  std::vector<CouplingTerm> terms;
};

// H_tot = H_tot0 + h_tot1 with H_tot0 = h_s0 (x) I + I (x) h_e0 + sum_m S_m (x) B_m.
// The coupling terms must commute with the factor Hamiltonians (and with each
// other) so that H_tot0 has a product eigenbasis.
struct HamiltonianSplit {
  Matrix h_s0;
  Matrix h_e0;
  CouplingDecomposition coupling;
  Matrix h_tot1;

  Index dim_s() const { return h_s0.rows(); }
  Index dim_e() const { return h_e0.rows(); }
  Index dim() const { return dim_s() * dim_e(); }

  Matrix h_tot0(Index dim_budget = kDefaultDimBudget) const;
  Matrix h_tot(Index dim_budget = kDefaultDimBudget) const;

  // Hermiticity plus the commuting-structure checks. Throws SolvabilityError.
  void validate(double tol = 1e-10) const;
};

// Product eigenbasis of H_tot0 with energies E_{gamma v} in flat order.
struct SesrBasis {
  Index dim_s = 0;
  Index dim_e = 0;
  RealVector energies;
  Matrix basis_change;    // composite unitary, columns = SESR kets
  Matrix system_vectors;  // U_S
  Matrix env_vectors;     // U_E
  // basis_change == U_S (x) U_E. Degenerate-subspace rotations can mix
  // product vectors, after which only the composite unitary is meaningful.
  bool product_form = true;

  Index dim() const { return dim_s * dim_e; }
};

// Diagonal and off-diagonal parts of H_tot1 in the SESR, plus the improved
// energies currently attached to them.
struct PerturbationData {
  RealVector h1_diag;
  Matrix g1;  // zero diagonal, hermitian
  RealVector improved_energies;
  int improved_order = 1;
};

struct RedivisionResult {
  HamiltonianSplit split;
  SesrBasis basis;
  PerturbationData pert;
};

struct DegenerateReport {
  bool ok = true;
  double max_offdiagonal = 0.0;
  std::vector<std::pair<Index, Index>> offending_pairs;
};

double default_gap_tol(const RealVector& energies);

// Builds the product eigenbasis and energies E_{gamma v} = E_gamma + eps_v +
// sum_m s_{m gamma} r_{m v}. Throws SolvabilityError when the commuting checks
// fail or H_tot0 is not diagonal in the constructed basis.
SesrBasis build_sesr(const HamiltonianSplit& split, double tol = 1e-10);

// h1_diag / g1 = diagonal / off-diagonal parts of U^dagger h_tot1 U;
// improved energies initialized to E + h1_diag.
PerturbationData perturbation_matrix(const Matrix& h_tot1, const SesrBasis& basis);

// Moves the diagonal part of H_tot1 into H_tot0: E' = E + h1, new h1 = 0,
// g1 unchanged. The returned split carries the absorbed diagonal as extra
// projector-valued coupling terms so it remains a valid HamiltonianSplit.
RedivisionResult hamiltonian_redivision(const HamiltonianSplit& split, const SesrBasis& basis,
                                        const PerturbationData& pert);

// Diagonalizes the g1 blocks inside degenerate energy clusters, rotating the
// basis and moving the block eigenvalues into h1_diag.
std::pair<SesrBasis, PerturbationData> diagonalize_degenerate_subspaces(
    const SesrBasis& basis, const PerturbationData& pert, double gap_tol);

// true iff max |g1| over degenerate level pairs < 1e-10 * ||H_tot1||.
DegenerateReport check_degenerate_offdiagonals(const SesrBasis& basis,
                                               const PerturbationData& pert, double gap_tol);

// E~ = E + h1 + sum_{a=2..order} G^(a), the nested perturbation sums with the
// eta selectors of the fourth and fifth order terms. Degenerate denominators
// with structurally nonzero numerators raise DegeneracyError naming the pair.
RealVector improved_energies(const PerturbationData& pert, const RealVector& energies,
                             int order, double gap_tol = -1.0);

}  // namespace oqdyn

#endif  // OQDYN_SESR_HPP

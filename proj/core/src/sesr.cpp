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

#include "oqdyn/sesr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace oqdyn {

namespace {

double matrix_scale(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

std::string level_pair_label(Index p, Index q, const RealVector& energies) {
  std::ostringstream os;
  os << "levels (" << p << ", " << q << ") with energies " << energies(p) << " and "
     << energies(q);
  return os.str();
}

// Nonzero off-diagonal structure of g1, with the structural-zero threshold.
struct SparseRows {
  std::vector<std::vector<Index>> nz;
  double tau = 0.0;

  explicit SparseRows(const Matrix& g1) {
    const Index n = g1.rows();
    tau = kStructuralZero * std::max(1.0, matrix_scale(g1));
    nz.resize(n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i != j && std::abs(g1(i, j)) > tau) nz[i].push_back(j);
      }
    }
  }
};

}  // namespace

Matrix HamiltonianSplit::h_tot0(Index dim_budget) const {
  Matrix h = tensor_product(h_s0, identity(dim_e()), dim_budget) +
             tensor_product(identity(dim_s()), h_e0, dim_budget);
  for (const auto& term : coupling.terms) {
    h += tensor_product(term.system_op, term.env_op, dim_budget);
  }
  return h;
}

Matrix HamiltonianSplit::h_tot(Index dim_budget) const {
  return h_tot0(dim_budget) + h_tot1;
}

void HamiltonianSplit::validate(double tol) const {
  if (h_s0.rows() != h_s0.cols() || h_e0.rows() != h_e0.cols()) {
    throw DimensionError("HamiltonianSplit: factor Hamiltonians must be square");
  }
  if (h_tot1.rows() != dim() || h_tot1.cols() != dim()) {
    throw DimensionError("HamiltonianSplit: h_tot1 dimension mismatch");
  }
  const double s_scale = std::max(1.0, matrix_scale(h_s0));
  const double e_scale = std::max(1.0, matrix_scale(h_e0));
  if (hermiticity_defect(h_s0) > tol * s_scale || hermiticity_defect(h_e0) > tol * e_scale) {
    throw SolvabilityError("HamiltonianSplit: factor Hamiltonians are not hermitian");
  }
  if (hermiticity_defect(h_tot1) > tol * std::max(1.0, matrix_scale(h_tot1))) {
    throw SolvabilityError("HamiltonianSplit: h_tot1 is not hermitian");
  }
  Matrix coupling_sum = Matrix::Zero(dim(), dim());
  for (const auto& term : coupling.terms) {
    if (term.system_op.rows() != dim_s() || term.env_op.rows() != dim_e()) {
      throw DimensionError("HamiltonianSplit: coupling term dimension mismatch");
    }
    coupling_sum += tensor_product(term.system_op, term.env_op);
  }
  if (hermiticity_defect(coupling_sum) > tol * std::max(1.0, matrix_scale(coupling_sum))) {
    throw SolvabilityError("H_SE0 violates SESR solvability: coupling sum is not hermitian");
  }
  for (std::size_t m = 0; m < coupling.terms.size(); ++m) {
    const auto& term = coupling.terms[m];
    const double ts = std::max(1.0, matrix_scale(term.system_op));
    const double te = std::max(1.0, matrix_scale(term.env_op));
    if (hermiticity_defect(term.system_op) > tol * ts ||
        hermiticity_defect(term.env_op) > tol * te) {
      throw SolvabilityError("H_SE0 violates SESR solvability: coupling factors of term " +
                             std::to_string(m) + " are not hermitian");
    }
    if (matrix_scale(commutator(h_s0, term.system_op)) > tol * s_scale * ts) {
      throw SolvabilityError("H_SE0 violates SESR solvability: [h_S0, S_" +
                             std::to_string(m) + "] != 0");
    }
    if (matrix_scale(commutator(h_e0, term.env_op)) > tol * e_scale * te) {
      throw SolvabilityError("H_SE0 violates SESR solvability: [h_E0, B_" +
                             std::to_string(m) + "] != 0");
    }
    for (std::size_t m2 = m + 1; m2 < coupling.terms.size(); ++m2) {
      const auto& other = coupling.terms[m2];
      if (matrix_scale(commutator(term.system_op, other.system_op)) >
              tol * ts * std::max(1.0, matrix_scale(other.system_op)) ||
          matrix_scale(commutator(term.env_op, other.env_op)) >
              tol * te * std::max(1.0, matrix_scale(other.env_op))) {
        throw SolvabilityError("H_SE0 violates SESR solvability: coupling terms " +
                               std::to_string(m) + " and " + std::to_string(m2) +
                               " do not commute factor-wise");
      }
    }
  }
}

double default_gap_tol(const RealVector& energies) {
  if (energies.size() == 0) return 1e-12;
  const double spread = energies.maxCoeff() - energies.minCoeff();
  if (spread > 0.0) return 1e-9 * spread;
  return 1e-12 * std::max(1.0, energies.cwiseAbs().maxCoeff());
}

namespace {

struct FactorEigen {
  Matrix vectors;
  RealVector h0_values;
  std::vector<RealVector> op_values;  // one vector per coupling operator
};

void phase_fix_columns(Matrix& v) {
  for (Index c = 0; c < v.cols(); ++c) {
    const double floor = 1e-12 * std::max(1.0, v.col(c).norm());
    Index first = 0;
    while (first < v.rows() - 1 && std::abs(v(first, c)) <= floor) ++first;
    const Complex z = v(first, c);
    const double mag = std::abs(z);
    if (mag > 0.0) v.col(c) *= std::conj(z) / mag;
  }
}

// Common eigenbasis of h0 and a mutually commuting hermitian family: eigh of
// h0, then refinement of each degenerate cluster by successive operators.
FactorEigen common_eigenbasis(const Matrix& h0, const std::vector<const Matrix*>& ops,
                              double tol, const char* side) {
  const Index n = h0.rows();
  Eigh base = hermitian_eigendecomposition(h0, tol);
  FactorEigen out;
  out.vectors = base.eigenvectors;
  out.h0_values = base.eigenvalues;
  out.op_values.assign(ops.size(), RealVector::Zero(n));

  std::vector<std::pair<Index, Index>> clusters;  // (start, size)
  {
    const double ctol = default_gap_tol(base.eigenvalues);
    Index start = 0;
    while (start < n) {
      Index end = start + 1;
      while (end < n && base.eigenvalues(end) - base.eigenvalues(end - 1) <= ctol) ++end;
      clusters.emplace_back(start, end - start);
      start = end;
    }
  }

  for (std::size_t m = 0; m < ops.size(); ++m) {
    const Matrix& op = *ops[m];
    const double op_scale = std::max(1.0, matrix_scale(op));
    std::vector<std::pair<Index, Index>> refined;
    for (auto [start, size] : clusters) {
      auto cols = out.vectors.middleCols(start, size);
      Matrix block = cols.adjoint() * op * cols;
      // The operator must leave each common eigenspace invariant.
      const double residual = (op * cols - cols * block).norm();
      if (residual > 1e-8 * op_scale * std::sqrt(static_cast<double>(size))) {
        throw SolvabilityError(std::string("simultaneous diagonalization failed on the ") +
                               side + " factor: operator " + std::to_string(m) +
                               " does not preserve an eigenspace (residual " +
                               std::to_string(residual) + ")");
      }
      RealVector vals;
      if (size > 1) {
        Eigh sub = hermitian_eigendecomposition(hermitize(block), 1e-8);
        out.vectors.middleCols(start, size) = cols * sub.eigenvectors;
        vals = sub.eigenvalues;
      } else {
        vals = RealVector::Constant(1, block(0, 0).real());
      }
      out.op_values[m].segment(start, size) = vals;
      // Split the cluster along gaps in the new operator's eigenvalues.
      const double vtol = default_gap_tol(vals);
      Index s2 = 0;
      while (s2 < size) {
        Index e2 = s2 + 1;
        while (e2 < size && vals(e2) - vals(e2 - 1) <= vtol) ++e2;
        refined.emplace_back(start + s2, e2 - s2);
        s2 = e2;
      }
    }
    clusters = std::move(refined);
  }

  phase_fix_columns(out.vectors);
  // Re-read every operator's diagonal in the final basis; earlier refinements
  // may have rotated inside clusters processed before later operators.
  for (std::size_t m = 0; m < ops.size(); ++m) {
    for (Index i = 0; i < n; ++i) {
      out.op_values[m](i) =
          (out.vectors.col(i).adjoint() * (*ops[m]) * out.vectors.col(i))(0, 0).real();
    }
  }
  return out;
}

}  // namespace

SesrBasis build_sesr(const HamiltonianSplit& split, double tol) {
  split.validate(tol);

  std::vector<const Matrix*> s_ops, e_ops;
  s_ops.reserve(split.coupling.terms.size());
  e_ops.reserve(split.coupling.terms.size());
  for (const auto& term : split.coupling.terms) {
    s_ops.push_back(&term.system_op);
    e_ops.push_back(&term.env_op);
  }

  FactorEigen sys = common_eigenbasis(split.h_s0, s_ops, tol, "system");
  FactorEigen env = common_eigenbasis(split.h_e0, e_ops, tol, "environment");

  SesrBasis basis;
  basis.dim_s = split.dim_s();
  basis.dim_e = split.dim_e();
  basis.system_vectors = sys.vectors;
  basis.env_vectors = env.vectors;
  basis.basis_change = tensor_product(sys.vectors, env.vectors);
  basis.product_form = true;

  basis.energies = RealVector::Zero(basis.dim());
  for (Index g = 0; g < basis.dim_s; ++g) {
    for (Index v = 0; v < basis.dim_e; ++v) {
      double e = sys.h0_values(g) + env.h0_values(v);
      for (std::size_t m = 0; m < s_ops.size(); ++m) {
        e += sys.op_values[m](g) * env.op_values[m](v);
      }
      basis.energies(CompositeIndex::flat(g, v, basis.dim_e)) = e;
    }
  }

  // H_tot0 must be diagonal in the constructed basis with the factor energies.
  const Matrix h0 = split.h_tot0();
  const Matrix r = basis.basis_change.adjoint() * h0 * basis.basis_change;
  const double h0_norm = h0.norm();
  Matrix offdiag = r;
  offdiag.diagonal().setZero();
  if (offdiag.norm() > 1e-9 * std::max(1.0, h0_norm)) {
    throw SolvabilityError("H_SE0 violates SESR solvability: H_tot0 is not diagonal in the "
                           "product eigenbasis");
  }
  const double diag_err = (r.diagonal().real() - basis.energies).cwiseAbs().maxCoeff();
  if (diag_err > 1e-8 * std::max(1.0, h0_norm)) {
    throw SolvabilityError("SESR energies disagree with the assembled H_tot0 diagonal by " +
                           std::to_string(diag_err));
  }
  return basis;
}

PerturbationData perturbation_matrix(const Matrix& h_tot1, const SesrBasis& basis) {
  if (h_tot1.rows() != basis.dim() || h_tot1.cols() != basis.dim()) {
    throw DimensionError("perturbation_matrix: dimension mismatch");
  }
  if (hermiticity_defect(h_tot1) > 1e-10 * std::max(1.0, matrix_scale(h_tot1))) {
    throw NumericsError("perturbation_matrix: h_tot1 is not hermitian");
  }
  PerturbationData pert;
  Matrix w = hermitize(basis.basis_change.adjoint() * h_tot1 * basis.basis_change);
  pert.h1_diag = w.diagonal().real();
  w.diagonal().setZero();
  pert.g1 = std::move(w);
  pert.improved_energies = basis.energies + pert.h1_diag;
  pert.improved_order = 1;
  return pert;
}

RedivisionResult hamiltonian_redivision(const HamiltonianSplit& split, const SesrBasis& basis,
                                        const PerturbationData& pert) {
  RedivisionResult out{split, basis, pert};
  const double scale = std::max(1.0, matrix_scale(split.h_tot1));
  if (pert.h1_diag.size() == 0 || pert.h1_diag.cwiseAbs().maxCoeff() <= kStructuralZero * scale) {
    return out;  // nothing to move
  }
  if (!basis.product_form) {
    throw Error("hamiltonian_redivision requires a product-form basis");
  }

  const Index dim_s = basis.dim_s;
  const Index dim_e = basis.dim_e;
  // The absorbed diagonal sum_{gv} h1_{gv} |phi_g chi_v><phi_g chi_v| is a sum
  // of projector (x) env-diagonal coupling terms, so the split stays valid.
  for (Index g = 0; g < dim_s; ++g) {
    Matrix env_part = Matrix::Zero(dim_e, dim_e);
    double row_scale = 0.0;
    for (Index v = 0; v < dim_e; ++v) {
      const double h = pert.h1_diag(CompositeIndex::flat(g, v, dim_e));
      row_scale = std::max(row_scale, std::abs(h));
      env_part += h * (basis.env_vectors.col(v) * basis.env_vectors.col(v).adjoint());
    }
    if (row_scale <= kStructuralZero * scale) continue;
    Matrix proj = basis.system_vectors.col(g) * basis.system_vectors.col(g).adjoint();
    out.split.coupling.terms.push_back({hermitize(proj), hermitize(env_part)});
  }

  Matrix diag_composite = basis.basis_change *
                          pert.h1_diag.cast<Complex>().asDiagonal() *
                          basis.basis_change.adjoint();
  out.split.h_tot1 = hermitize(split.h_tot1 - diag_composite);

  out.basis.energies = basis.energies + pert.h1_diag;
  out.pert.h1_diag = RealVector::Zero(pert.h1_diag.size());
  out.pert.g1 = pert.g1;
  out.pert.improved_energies = out.basis.energies;
  out.pert.improved_order = 1;
  return out;
}

std::pair<SesrBasis, PerturbationData> diagonalize_degenerate_subspaces(
    const SesrBasis& basis, const PerturbationData& pert, double gap_tol) {
  if (gap_tol < 0.0) gap_tol = default_gap_tol(basis.energies);
  const Index n = basis.dim();
  SesrBasis out_basis = basis;
  PerturbationData out_pert = pert;

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return basis.energies(a) < basis.energies(b);
  });

  const double tau = kStructuralZero * std::max(1.0, matrix_scale(pert.g1));
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() &&
           basis.energies(order[end]) - basis.energies(order[end - 1]) <= gap_tol) {
      ++end;
    }
    const Index m = static_cast<Index>(end - start);
    if (m > 1) {
      Matrix block(m, m);
      for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
          block(i, j) = out_pert.g1(order[start + i], order[start + j]);
        }
      }
      if (matrix_scale(block) > tau) {
        Eigh sub = hermitian_eigendecomposition(hermitize(block), 1e-8);
        const Matrix& w = sub.eigenvectors;
        // Rotate the composite basis columns of this cluster.
        Matrix cols(n, m);
        for (Index j = 0; j < m; ++j) cols.col(j) = out_basis.basis_change.col(order[start + j]);
        cols = cols * w;
        for (Index j = 0; j < m; ++j) out_basis.basis_change.col(order[start + j]) = cols.col(j);
        out_basis.product_form = false;

        // g1 <- R^dagger g1 R restricted to the cluster rows/columns.
        Matrix col_block(n, m);
        for (Index j = 0; j < m; ++j) col_block.col(j) = out_pert.g1.col(order[start + j]);
        col_block = col_block * w;
        for (Index j = 0; j < m; ++j) out_pert.g1.col(order[start + j]) = col_block.col(j);
        Matrix row_block(m, n);
        for (Index i = 0; i < m; ++i) row_block.row(i) = out_pert.g1.row(order[start + i]);
        row_block = w.adjoint() * row_block;
        for (Index i = 0; i < m; ++i) out_pert.g1.row(order[start + i]) = row_block.row(i);

        // The rotated in-cluster block is diagonal: move it into h1_diag.
        for (Index i = 0; i < m; ++i) {
          out_pert.h1_diag(order[start + i]) += sub.eigenvalues(i);
          for (Index j = 0; j < m; ++j) {
            out_pert.g1(order[start + i], order[start + j]) = Complex(0.0, 0.0);
          }
        }
      }
    }
    start = end;
  }
  out_pert.g1 = hermitize(out_pert.g1);
  out_pert.g1.diagonal().setZero();
  out_pert.improved_energies = out_basis.energies + out_pert.h1_diag;
  out_pert.improved_order = 1;
  return {std::move(out_basis), std::move(out_pert)};
}

DegenerateReport check_degenerate_offdiagonals(const SesrBasis& basis,
                                               const PerturbationData& pert, double gap_tol) {
  if (gap_tol < 0.0) gap_tol = default_gap_tol(basis.energies);
  DegenerateReport report;
  const double h1_norm =
      std::sqrt(pert.g1.squaredNorm() + pert.h1_diag.squaredNorm());
  const double threshold = 1e-10 * h1_norm;

  const Index n = basis.dim();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return basis.energies(a) < basis.energies(b);
  });
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() &&
           basis.energies(order[end]) - basis.energies(order[end - 1]) <= gap_tol) {
      ++end;
    }
    for (std::size_t i = start; i < end; ++i) {
      for (std::size_t j = i + 1; j < end; ++j) {
        const double mag = std::abs(pert.g1(order[i], order[j]));
        report.max_offdiagonal = std::max(report.max_offdiagonal, mag);
        if (mag >= threshold && mag > 0.0) {
          report.ok = false;
          report.offending_pairs.emplace_back(std::min(order[i], order[j]),
                                              std::max(order[i], order[j]));
        }
      }
    }
    start = end;
  }
  std::sort(report.offending_pairs.begin(), report.offending_pairs.end());
  return report;
}

namespace {

// Guarded reciprocal of E_p - E_r; callers only invoke it with a structurally
// nonzero numerator, so a vanishing gap is the paper's excluded degeneracy.
struct GapInverter {
  const RealVector& energies;
  double gap_tol;

  double operator()(Index p, Index r) const {
    const double gap = energies(p) - energies(r);
    if (std::abs(gap) <= gap_tol) {
      throw DegeneracyError("degenerate energy denominator with nonzero numerator at " +
                            level_pair_label(p, r, energies));
    }
    return 1.0 / gap;
  }
};

}  // namespace

RealVector improved_energies(const PerturbationData& pert, const RealVector& energies,
                             int order, double gap_tol) {
  if (order < 2 || order > 5) {
    throw ValidationError("improved_energies: order must be in [2, 5]");
  }
  if (gap_tol < 0.0) gap_tol = default_gap_tol(energies);
  const Index n = energies.size();
  const Matrix& g = pert.g1;
  SparseRows rows(g);
  GapInverter inv{energies, gap_tol};

  RealVector out = energies + pert.h1_diag;
  for (Index p = 0; p < n; ++p) {
    Complex total(0.0, 0.0);

    // G^(2)
    for (Index r : rows.nz[p]) {
      total += g(p, r) * g(r, p) * inv(p, r);
    }

    if (order >= 3) {
      for (Index r1 : rows.nz[p]) {
        const double i1 = inv(p, r1);
        for (Index r2 : rows.nz[r1]) {
          if (std::abs(g(r2, p)) <= rows.tau) continue;
          total += g(p, r1) * g(r1, r2) * g(r2, p) * i1 * inv(p, r2);
        }
      }
    }

    if (order >= 4) {
      for (Index r1 : rows.nz[p]) {
        const double i1 = inv(p, r1);
        for (Index r2 : rows.nz[r1]) {
          if (r2 == p) continue;  // eta_{p, r2}
          const double i2 = inv(p, r2);
          for (Index r3 : rows.nz[r2]) {
            if (std::abs(g(r3, p)) <= rows.tau) continue;
            total += g(p, r1) * g(r1, r2) * g(r2, r3) * g(r3, p) * i1 * i2 * inv(p, r3);
          }
        }
      }
      for (Index r1 : rows.nz[p]) {
        const double i1 = inv(p, r1);
        const double w1 = (g(p, r1) * g(r1, p)).real();
        for (Index r2 : rows.nz[p]) {
          total -= w1 * (g(p, r2) * g(r2, p)).real() * i1 * i1 * inv(p, r2);
        }
      }
    }

    if (order >= 5) {
      for (Index r1 : rows.nz[p]) {
        const double i1 = inv(p, r1);
        for (Index r2 : rows.nz[r1]) {
          if (r2 == p) continue;  // eta_{p, r2}
          const double i2 = inv(p, r2);
          for (Index r3 : rows.nz[r2]) {
            if (r3 == p) continue;  // eta_{p, r3}
            const double i3 = inv(p, r3);
            for (Index r4 : rows.nz[r3]) {
              if (std::abs(g(r4, p)) <= rows.tau) continue;
              total += g(p, r1) * g(r1, r2) * g(r2, r3) * g(r3, r4) * g(r4, p) * i1 * i2 *
                       i3 * inv(p, r4);
            }
          }
        }
      }
      for (Index r1 : rows.nz[p]) {
        const double i1 = inv(p, r1);
        const double w1 = (g(p, r1) * g(r1, p)).real();
        for (Index r2 : rows.nz[p]) {
          const double i2 = inv(p, r2);
          for (Index r3 : rows.nz[r2]) {
            if (std::abs(g(r3, p)) <= rows.tau) continue;
            const double i3 = inv(p, r3);
            const Complex chain = g(p, r2) * g(r2, r3) * g(r3, p);
            total -= w1 * chain * (i1 * i1 * i2 * i3 + i1 * i2 * i2 * i3 + i1 * i2 * i3 * i3);
          }
        }
      }
    }

    out(p) += total.real();
  }
  return out;
}

}  // namespace oqdyn

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

#include "oqdyn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oqdyn {

void DensityMatrix::validate() const {
  if (op.rows() != op.cols()) {
    throw ValidationError("density matrix is not square");
  }
  if (!is_finite(op)) {
    throw ValidationError("density matrix has non-finite entries");
  }
  const double herm = hermiticity_defect(op);
  if (herm > tolerance) {
    throw ValidationError("density matrix is not hermitian: max|rho - rho^dagger| = " +
                          std::to_string(herm));
  }
  const double trace_err = std::abs(op.trace() - Complex(1.0, 0.0));
  if (trace_err > tolerance) {
    throw ValidationError("density matrix trace deviates from 1 by " +
                          std::to_string(trace_err));
  }
  const double lambda_min = min_eigenvalue(hermitize(op));
  if (lambda_min < -tolerance) {
    throw ValidationError("density matrix has negative eigenvalue " +
                          std::to_string(lambda_min));
  }
}

Matrix tensor_product(const Matrix& a, const Matrix& b, Index dim_budget) {
  if (a.rows() != a.cols() || b.rows() != b.cols()) {
    throw DimensionError("tensor_product requires square operands");
  }
  const Index da = a.rows();
  const Index db = b.rows();
  if (da != 0 && db > dim_budget / da) {
    throw BudgetError("dimension budget exceeded: " + std::to_string(da) + " x " +
                      std::to_string(db) + " > " + std::to_string(dim_budget));
  }
  Matrix out(da * db, da * db);
  for (Index i = 0; i < da; ++i) {
    for (Index j = 0; j < da; ++j) {
      out.block(i * db, j * db, db, db) = a(i, j) * b;
    }
  }
  return out;
}

Matrix partial_trace_env(const Matrix& rho_tot, Index dim_s, Index dim_e) {
  if (rho_tot.rows() != rho_tot.cols() || rho_tot.rows() != dim_s * dim_e) {
    throw DimensionError("partial_trace_env: dimension mismatch, expected " +
                         std::to_string(dim_s * dim_e) + " got " +
                         std::to_string(rho_tot.rows()));
  }
  Matrix out = Matrix::Zero(dim_s, dim_s);
  for (Index g = 0; g < dim_s; ++g) {
    for (Index gp = 0; gp < dim_s; ++gp) {
      Complex acc(0.0, 0.0);
      for (Index v = 0; v < dim_e; ++v) {
        acc += rho_tot(g * dim_e + v, gp * dim_e + v);
      }
      out(g, gp) = acc;
    }
  }
  return out;
}

DensityMatrix partial_trace_env(const DensityMatrix& rho_tot, Index dim_s, Index dim_e) {
  return DensityMatrix(partial_trace_env(rho_tot.op, dim_s, dim_e), rho_tot.tolerance);
}

namespace {

// First component with magnitude above a small floor, used for the
// deterministic phase and ordering conventions.
Index first_significant_component(const Vector& col) {
  const double floor = 1e-12 * std::max(1.0, col.norm());
  for (Index i = 0; i < col.size(); ++i) {
    if (std::abs(col(i)) > floor) return i;
  }
  return 0;
}

void phase_fix_column(Matrix& vecs, Index col) {
  Vector c = vecs.col(col);
  const Index k = first_significant_component(c);
  const Complex z = c(k);
  const double mag = std::abs(z);
  if (mag > 0.0) {
    vecs.col(col) *= std::conj(z) / mag;
  }
}

}  // namespace

Eigh hermitian_eigendecomposition(const Matrix& h, double hermiticity_tol) {
  if (h.rows() != h.cols()) {
    throw DimensionError("hermitian_eigendecomposition requires a square matrix");
  }
  if (h.size() == 0) return Eigh{RealVector(0), Matrix(0, 0)};
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > hermiticity_tol * scale) {
    throw NumericsError("hermitian_eigendecomposition: input is not hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitize(h));
  if (solver.info() != Eigen::Success) {
    throw NumericsError("hermitian eigendecomposition failed to converge");
  }
  Eigh out{solver.eigenvalues(), solver.eigenvectors()};

  const Index n = out.eigenvalues.size();
  if (n == 0) return out;
  const double spread = out.eigenvalues(n - 1) - out.eigenvalues(0);
  const double gap_tol = 1e-9 * std::max(spread, 1e-300);

  // Reorder within degenerate clusters by descending magnitude of the first
  // nonzero component, then phase-fix every column.
  Index start = 0;
  while (start < n) {
    Index end = start + 1;
    while (end < n && out.eigenvalues(end) - out.eigenvalues(end - 1) <= gap_tol) ++end;
    if (end - start > 1) {
      std::vector<Index> order(end - start);
      std::iota(order.begin(), order.end(), start);
      std::vector<double> key(end - start);
      for (Index c = start; c < end; ++c) {
        key[c - start] = std::abs(out.eigenvectors(
            first_significant_component(out.eigenvectors.col(c)), c));
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](Index a, Index b) { return key[a - start] > key[b - start]; });
      Matrix block(n, end - start);
      RealVector vals(end - start);
      for (Index c = 0; c < end - start; ++c) {
        block.col(c) = out.eigenvectors.col(order[c]);
        vals(c) = out.eigenvalues(order[c]);
      }
      out.eigenvectors.middleCols(start, end - start) = block;
      out.eigenvalues.segment(start, end - start) = vals;
    }
    start = end;
  }
  for (Index c = 0; c < n; ++c) {
    phase_fix_column(out.eigenvectors, c);
  }
  return out;
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("trace_distance: dimension mismatch");
  }
  if (a.size() == 0) return 0.0;
  Matrix diff = a - b;
  if (hermiticity_defect(diff) <= 1e-12 * std::max(1.0, diff.cwiseAbs().maxCoeff())) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitize(diff), Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
  }
  Eigen::JacobiSVD<Matrix> svd(diff);
  return 0.5 * svd.singularValues().sum();
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_distance(a.op, b.op);
}

Matrix identity(Index dim) { return Matrix::Identity(dim, dim); }

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix pauli_y() {
  Matrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

bool is_hermitian(const Matrix& m, double tol) {
  return m.rows() == m.cols() && hermiticity_defect(m) <= tol;
}

bool is_finite(const Matrix& m) { return m.allFinite(); }

double hermiticity_defect(const Matrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double purity(const Matrix& rho) { return (rho * rho).trace().real(); }

double min_eigenvalue(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Matrix basis_projector(Index dim, Index k) {
  Matrix m = Matrix::Zero(dim, dim);
  m(k, k) = 1.0;
  return m;
}

}  // namespace oqdyn

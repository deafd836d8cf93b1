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

#include "oqdyn/milburn.hpp"

#include <cmath>
#include <vector>

#include "path_walk.hpp"

namespace oqdyn {

Matrix milburn_rhs(const DensityMatrix& rho, const Matrix& h, const MilburnParams& params) {
  if (h.rows() != rho.dim() || h.cols() != rho.dim()) {
    throw DimensionError("milburn_rhs: dimension mismatch");
  }
  const Matrix c1 = commutator(h, rho.op);
  return Complex(0.0, -1.0) * c1 - 0.5 * params.theta0 * commutator(h, c1);
}

namespace {

Complex g_stamp(double x, double t, double theta0) {
  return std::exp(Complex(-0.5 * theta0 * x * x * t, -x * t));
}

}  // namespace

Matrix kraus_operator(int k, double t, const Eigh& h_eig, const MilburnParams& params) {
  if (k < 0) throw ValidationError("kraus_operator: k must be nonnegative");
  const Index n = h_eig.eigenvalues.size();
  // sqrt((theta0 t)^k / k!) lambda^k g(lambda; t) per eigenvalue, with the
  // prefactor folded in logarithmically to avoid overflow at large k.
  Vector diag(n);
  const double tt = params.theta0 * t;
  for (Index i = 0; i < n; ++i) {
    const double lambda = h_eig.eigenvalues(i);
    double weight = 0.0;
    if (k == 0) {
      weight = 1.0;
    } else if (tt > 0.0 && lambda != 0.0) {
      double log_w = 0.0;
      for (int j = 1; j <= k; ++j) {
        log_w += 0.5 * (std::log(tt) - std::log(static_cast<double>(j)));
        log_w += std::log(std::abs(lambda));
      }
      weight = std::exp(log_w);
      if (lambda < 0.0 && (k % 2 == 1)) weight = -weight;
    } else {
      weight = 0.0;
    }
    diag(i) = weight * g_stamp(lambda, t, params.theta0);
  }
  return h_eig.eigenvectors * diag.asDiagonal() * h_eig.eigenvectors.adjoint();
}

int kraus_kmax_for_tolerance(double theta0, double t, double lambda_max, double tol) {
  const double x = theta0 * t * lambda_max * lambda_max;
  if (x <= 0.0) return 0;
  double term = 1.0;  // x^0 / 0!
  int k = 0;
  while (term >= tol && k < 10000) {
    ++k;
    term *= x / k;
  }
  return k;
}

double kraus_completeness_defect(int k_max, double theta0, double t,
                                 const RealVector& evals) {
  double defect = 0.0;
  for (Index i = 0; i < evals.size(); ++i) {
    const double x = theta0 * t * evals(i) * evals(i);
    // 1 - e^{-x} sum_{k<=K} x^k / k!  (the Poisson tail).
    double term = std::exp(-x);
    double sum = term;
    for (int k = 1; k <= k_max; ++k) {
      term *= x / k;
      sum += term;
    }
    defect = std::max(defect, std::abs(1.0 - sum));
  }
  return defect;
}

DensityMatrix milburn_evolve_closed_form(const DensityMatrix& rho0, double t,
                                         const Matrix& h, const MilburnParams& params) {
  return milburn_evolve_closed_form(rho0, t, hermitian_eigendecomposition(h), params);
}

DensityMatrix milburn_evolve_closed_form(const DensityMatrix& rho0, double t,
                                         const Eigh& h_eig, const MilburnParams& params) {
  const Index n = rho0.dim();
  if (h_eig.eigenvalues.size() != n) {
    throw DimensionError("milburn_evolve_closed_form: dimension mismatch");
  }
  Matrix w = h_eig.eigenvectors.adjoint() * rho0.op * h_eig.eigenvectors;
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      w(a, b) *= g_stamp(h_eig.eigenvalues(a) - h_eig.eigenvalues(b), t, params.theta0);
    }
  }
  Matrix out = h_eig.eigenvectors * w * h_eig.eigenvectors.adjoint();
  return DensityMatrix(hermitize(out), rho0.tolerance);
}

DensityMatrix milburn_evolve_kraus(const DensityMatrix& rho0, double t, const Matrix& h,
                                   const MilburnParams& params, int k_max) {
  const Eigh h_eig = hermitian_eigendecomposition(h);
  const double lambda_max = h_eig.eigenvalues.cwiseAbs().maxCoeff();
  if (k_max < 0) {
    k_max = kraus_kmax_for_tolerance(params.theta0, t, lambda_max, params.kraus_cutoff_tol);
  }
  const double defect = kraus_completeness_defect(k_max, params.theta0, t, h_eig.eigenvalues);
  if (defect > params.kraus_cutoff_tol) {
    throw Error("milburn_evolve_kraus: completeness defect " + std::to_string(defect) +
                " above tolerance at K_max = " + std::to_string(k_max) +
                "; increase K_max");
  }
  Matrix out = Matrix::Zero(rho0.dim(), rho0.dim());
  for (int k = 0; k <= k_max; ++k) {
    const Matrix m_k = kraus_operator(k, t, h_eig, params);
    out += m_k * rho0.op * m_k.adjoint();
  }
  return DensityMatrix(hermitize(out), rho0.tolerance);
}

Complex binomial_coefficient_CKl(int K, std::span<const double> nodes, double confluence_tol) {
  if (K < 0) throw ValidationError("binomial_coefficient_CKl: K must be nonnegative");
  if (nodes.size() > static_cast<std::size_t>(K) + 1) {
    // The divided difference of a degree-K polynomial over more than K+1
    // nodes vanishes identically.
    return Complex(0.0, 0.0);
  }
  return divided_difference(PolyExpFunction::power(K), nodes, confluence_tol);
}

DensityMatrix milburn_perturbative_reduced(const DensityMatrix& rho0_tot, double t,
                                           const SesrBasis& basis, const Matrix& h1_full,
                                           const MilburnParams& params, int k_max, int l_max,
                                           const SeriesConfig& series_cfg) {
  const Index n = basis.dim();
  if (rho0_tot.dim() != n || h1_full.rows() != n) {
    throw DimensionError("milburn_perturbative_reduced: dimension mismatch");
  }
  if (k_max < 0 || l_max < 0 || l_max > 6) {
    throw ValidationError("milburn_perturbative_reduced: orders out of range");
  }
  const Matrix& u = basis.basis_change;
  const Matrix w0 = u.adjoint() * rho0_tot.op * u;
  const double tau = kStructuralZero * std::max(1.0, h1_full.cwiseAbs().maxCoeff());
  const double ctol = series_cfg.confluence_tol >= 0.0
                          ? series_cfg.confluence_tol
                          : 1e-8 * (basis.energies.size()
                                        ? basis.energies.cwiseAbs().maxCoeff()
                                        : 0.0);
  const double tt = params.theta0 * t;

  Matrix acc = Matrix::Zero(n, n);
  std::vector<double> path_nodes;
  for (int k = 0; k <= k_max; ++k) {
    // sqrt((theta0 t)^k / k!)
    double pref = 1.0;
    for (int j = 1; j <= k; ++j) pref *= std::sqrt(tt / j);
    if (k > 0 && tt == 0.0) break;  // only k = 0 contributes at theta0 = 0

    Matrix m_k = Matrix::Zero(n, n);
    const PolyExpFunction f = PolyExpFunction::power_times_g(k, t, params.theta0);
    for (Index p = 0; p < n; ++p) {
      m_k(p, p) = pref * f.value(basis.energies(p));
    }
    for (int l = 1; l <= l_max; ++l) {
      detail::SeriesPathWalker walker(h1_full, tau, series_cfg.path_budget);
      std::vector<double> nodes(l + 1);
      walker.run(l, [&](std::span<const Index> path, Complex prod) {
        for (int j = 0; j <= l; ++j) nodes[j] = basis.energies(path[j]);
        const Complex dd = divided_difference(f, nodes, ctol);
        m_k(path[0], path[l]) += pref * dd * prod;
      });
    }
    acc += m_k * w0 * m_k.adjoint();
  }
  Matrix total = u * acc * u.adjoint();
  Matrix reduced = partial_trace_env(total, basis.dim_s, basis.dim_e);
  return DensityMatrix(hermitize(reduced), rho0_tot.tolerance);
}

}  // namespace oqdyn

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

#include "oqdyn/propagator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "path_walk.hpp"

namespace oqdyn {

namespace {

constexpr int kMaxExactOrder = 6;

double energy_scale(const RealVector& e) {
  return e.size() == 0 ? 0.0 : e.cwiseAbs().maxCoeff();
}

double resolve_confluence_tol(const SeriesConfig& cfg, const RealVector& energies) {
  return cfg.confluence_tol >= 0.0 ? cfg.confluence_tol : 1e-8 * energy_scale(energies);
}

}  // namespace

PropagatorTerm exact_term(int l, const SesrBasis& basis, const Matrix& h1_full, double t,
                          const SeriesConfig& cfg) {
  const Index n = basis.dim();
  if (h1_full.rows() != n || h1_full.cols() != n) {
    throw DimensionError("exact_term: H_tot1 dimension mismatch");
  }
  if (l < 0 || l > cfg.max_order_exact || cfg.max_order_exact > kMaxExactOrder) {
    throw ValidationError("exact_term: order must satisfy 0 <= l <= L <= 6");
  }

  PropagatorTerm term;
  term.order = l;
  term.time = t;
  term.matrix = Matrix::Zero(n, n);

  std::vector<Complex> phase(n);
  for (Index p = 0; p < n; ++p) {
    phase[p] = std::exp(Complex(0.0, -basis.energies(p) * t));
  }
  if (l == 0) {
    for (Index p = 0; p < n; ++p) term.matrix(p, p) = phase[p];
    return term;
  }

  const double tau = kStructuralZero * std::max(1.0, h1_full.cwiseAbs().maxCoeff());
  const double ctol = resolve_confluence_tol(cfg, basis.energies);
  const double radius = detail::cluster_radius(
      {basis.energies.data(), static_cast<std::size_t>(n)}, std::abs(t));

  std::array<double, kMaxExactOrder + 1> nodes{};
  std::array<Complex, kMaxExactOrder + 1> values{};
  detail::DividedDifferenceTable table;
  table.resize(l + 1);

  detail::SeriesPathWalker paths(h1_full, tau, cfg.path_budget);
  paths.run(l, [&](std::span<const Index> path, Complex prod) {
    const int m = static_cast<int>(path.size());
    for (int j = 0; j < m; ++j) {
      nodes[j] = basis.energies(path[j]);
      values[j] = phase[path[j]];
    }
    detail::sort_and_merge_nodes({nodes.data(), static_cast<std::size_t>(m)},
                                 {values.data(), static_cast<std::size_t>(m)}, ctol);
    const Complex dd = table.evaluate_exp({nodes.data(), static_cast<std::size_t>(m)},
                                          {values.data(), static_cast<std::size_t>(m)}, t,
                                          radius);
    term.matrix(path[0], path[m - 1]) += dd * prod;
  });
  return term;
}

namespace {

// Guarded energy gap for the improved-term denominators.
struct ImprovedGap {
  const RealVector& energies;
  double gap_tol;

  double operator()(Index p, Index q) const {
    const double gap = energies(p) - energies(q);
    if (std::abs(gap) <= gap_tol) {
      throw DegeneracyError(
          "improved term reached a degenerate energy denominator with nonzero numerator at "
          "levels (" + std::to_string(p) + ", " + std::to_string(q) + ")");
    }
    return gap;
  }
};

std::vector<std::vector<Index>> nonzero_rows(const Matrix& g, double tau) {
  std::vector<std::vector<Index>> nz(g.rows());
  for (Index i = 0; i < g.rows(); ++i) {
    for (Index j = 0; j < g.cols(); ++j) {
      if (i != j && std::abs(g(i, j)) > tau) nz[i].push_back(j);
    }
  }
  return nz;
}

}  // namespace

PropagatorTerm improved_term(int l, const SesrBasis& basis, const PerturbationData& pert,
                             double t, const SeriesConfig& cfg) {
  const Index n = basis.dim();
  if (l < 0 || l > 3) {
    throw ValidationError("improved_term: only orders 0..3 are supported");
  }
  const double h1_scale = std::max(1.0, pert.g1.size() ? pert.g1.cwiseAbs().maxCoeff() : 0.0);
  if (pert.h1_diag.size() && pert.h1_diag.cwiseAbs().maxCoeff() > 1e-10 * h1_scale) {
    throw Error("improved_term requires Hamiltonian redivision first (h1_diag != 0)");
  }

  PropagatorTerm term;
  term.order = l;
  term.time = t;
  term.matrix = Matrix::Zero(n, n);

  const RealVector& e = basis.energies;
  const RealVector& et = pert.improved_energies;
  std::vector<Complex> ph(n);
  for (Index p = 0; p < n; ++p) ph[p] = std::exp(Complex(0.0, -et(p) * t));

  if (l == 0) {
    for (Index p = 0; p < n; ++p) term.matrix(p, p) = ph[p];
    return term;
  }

  const Matrix& g = pert.g1;
  const double tau = kStructuralZero * std::max(1.0, g.cwiseAbs().maxCoeff());
  const auto nz = nonzero_rows(g, tau);
  ImprovedGap gap{e, default_gap_tol(e)};

  switch (l) {
    case 1:
      for (Index p = 0; p < n; ++p) {
        for (Index q : nz[p]) {
          term.matrix(p, q) = (ph[p] - ph[q]) / gap(p, q) * g(p, q);
        }
      }
      break;
    case 2:
      for (Index p = 0; p < n; ++p) {
        // Diagonal part.
        for (Index r : nz[p]) {
          const double d = gap(p, r);
          term.matrix(p, p) -= (ph[p] - ph[r]) / (d * d) * g(p, r) * g(r, p);
        }
        // Off-diagonal part, eta_{p,q}.
        for (Index r : nz[p]) {
          const double dpr = gap(p, r);
          for (Index q : nz[r]) {
            if (q == p) continue;
            const double dpq = gap(p, q);
            const double drq = gap(r, q);
            const Complex bracket =
                ph[p] / (dpr * dpq) - ph[r] / (dpr * drq) + ph[q] / (dpq * drq);
            term.matrix(p, q) += bracket * g(p, r) * g(r, q);
          }
        }
      }
      break;
    case 3:
      for (Index p = 0; p < n; ++p) {
        // Closed-chain diagonal block.
        for (Index r1 : nz[p]) {
          const double d1 = gap(p, r1);
          for (Index r2 : nz[r1]) {
            if (std::abs(g(r2, p)) <= tau) continue;
            const double d2 = gap(p, r2);
            const double d12 = gap(r1, r2);
            const Complex bracket = -ph[p] / (d1 * d2 * d2) - ph[p] / (d1 * d1 * d2) +
                                    ph[r1] / (d1 * d1 * d12) - ph[r2] / (d2 * d2 * d12);
            term.matrix(p, p) += bracket * g(p, r1) * g(r1, r2) * g(r2, p);
          }
        }
        // Loop-then-hop block.
        for (Index q : nz[p]) {
          const double dq = gap(p, q);
          Complex acc(0.0, 0.0);
          for (Index r1 : nz[p]) {
            const double d1 = gap(p, r1);
            acc += (g(p, r1) * g(r1, p)).real() * (1.0 / (d1 * dq * dq) + 1.0 / (d1 * d1 * dq));
          }
          term.matrix(p, q) -= ph[p] * acc * g(p, q);
        }
        // Three-hop block, eta_{p,q} overall.
        for (Index r1 : nz[p]) {
          const double d1 = gap(p, r1);
          for (Index r2 : nz[r1]) {
            const double d12 = gap(r1, r2);
            for (Index q : nz[r2]) {
              if (q == p) continue;
              const double dq = gap(p, q);
              Complex bracket(0.0, 0.0);
              if (r2 != p) {
                const double d2 = gap(p, r2);
                bracket += ph[p] / (d1 * d2 * dq);
                bracket += ph[r2] / (d2 * d12 * gap(r2, q));
              }
              if (r1 != q) {
                bracket -= ph[r1] / (d1 * d12 * gap(r1, q));
              }
              term.matrix(p, q) += bracket * g(p, r1) * g(r1, r2) * g(r2, q);
            }
          }
        }
      }
      break;
    default:
      break;
  }
  return term;
}

namespace {

PerturbationData prepare_improved(const SesrBasis& basis, const Matrix& h1_full,
                                  const PerturbationData* pert, const SeriesConfig& cfg) {
  PerturbationData pd = pert ? *pert : perturbation_matrix(h1_full, basis);
  const double scale = std::max(1.0, h1_full.size() ? h1_full.cwiseAbs().maxCoeff() : 0.0);
  if (pd.h1_diag.size() && pd.h1_diag.cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error("improved mode requires Hamiltonian redivision: h1_diag is nonzero");
  }
  const auto report = check_degenerate_offdiagonals(basis, pd, default_gap_tol(basis.energies));
  if (!report.ok) {
    throw DegeneracyError("improved mode: g1 does not vanish between degenerate levels (" +
                          std::to_string(report.offending_pairs.size()) + " offending pairs)");
  }
  if (pd.improved_order != cfg.improved_energy_order) {
    if (cfg.improved_energy_order <= 1) {
      pd.improved_energies = basis.energies + pd.h1_diag;
    } else {
      pd.improved_energies = improved_energies(pd, basis.energies, cfg.improved_energy_order);
    }
    pd.improved_order = cfg.improved_energy_order;
  }
  return pd;
}

}  // namespace

DensityMatrix evolve_total(const DensityMatrix& rho0, double t, const SesrBasis& basis,
                           const Matrix& h1_full, const SeriesConfig& cfg,
                           const PerturbationData* pert, double* hermiticity_defect_out) {
  const Index n = basis.dim();
  if (rho0.dim() != n) {
    throw DimensionError("evolve_total: initial state dimension mismatch");
  }
  const Matrix& u = basis.basis_change;
  Matrix w = u.adjoint() * rho0.op * u;

  Matrix result;
  if (!cfg.improved) {
    if (cfg.max_order_exact < 0 || cfg.max_order_exact > kMaxExactOrder) {
      throw ValidationError("evolve_total: max_order_exact must be in [0, 6]");
    }
    Matrix s = Matrix::Zero(n, n);
    for (int l = 0; l <= cfg.max_order_exact; ++l) {
      s += exact_term(l, basis, h1_full, t, cfg).matrix;
    }
    result = s * w * s.adjoint();
  } else {
    const PerturbationData pd = prepare_improved(basis, h1_full, pert, cfg);
    std::array<Matrix, 4> a;
    for (int l = 0; l <= 3; ++l) a[l] = improved_term(l, basis, pd, t, cfg).matrix;
    result = Matrix::Zero(n, n);
    for (int k = 0; k <= 3; ++k) {
      Matrix right = Matrix::Zero(n, n);
      for (int l = 0; l + k <= 3; ++l) right += a[l];
      result += a[k] * w * right.adjoint();
    }
  }

  Matrix back = u * result * u.adjoint();
  const double defect = hermiticity_defect(back);
  if (hermiticity_defect_out) *hermiticity_defect_out = defect;
  return DensityMatrix(hermitize(back), rho0.tolerance);
}

DensityMatrix evolve_reduced(const DensityMatrix& rho0, double t, const SesrBasis& basis,
                             const Matrix& h1_full, const SeriesConfig& cfg,
                             const PerturbationData* pert, double* hermiticity_defect_out) {
  DensityMatrix total =
      evolve_total(rho0, t, basis, h1_full, cfg, pert, hermiticity_defect_out);
  return partial_trace_env(total, basis.dim_s, basis.dim_e);
}

}  // namespace oqdyn

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

#include "oqdyn/models.hpp"

#include <cmath>
#include <sstream>

namespace oqdyn {

double SpinBathSpec::y(int k) const { return std::hypot(x(k), z(k)); }

int SpinBathSpec::bit(std::uint32_t env_bits, int k) const {
  return static_cast<int>((env_bits >> (n_env - k)) & 1u);
}

void SpinBathSpec::validate(bool require_y_positive) const {
  if (n_env < 1 || n_env > 30) {
    throw ValidationError("SpinBathSpec: n_env must be in [1, 30]");
  }
  if (z.size() != n_env || x.size() != n_env) {
    throw ValidationError("SpinBathSpec: Z and X must have length n_env");
  }
  if (dim() > dim_budget) {
    throw BudgetError("dimension budget exceeded: 2^" + std::to_string(n_env + 1) + " > " +
                      std::to_string(dim_budget));
  }
  if (require_y_positive) {
    for (int k = 0; k < n_env; ++k) {
      if (y(k) <= 0.0) {
        throw ValidationError("SpinBathSpec: Y_" + std::to_string(k + 1) +
                              " = 0 invalidates case four");
      }
    }
  }
}

std::string NaturalLabel::to_string() const {
  std::ostringstream os;
  os << n_s << ";";
  // Qubit 1 first: it is the most significant bit of env_bits.
  std::uint32_t bits = env_bits;
  std::string env;
  while (bits > 0 || env.empty()) {
    env.insert(env.begin(), static_cast<char>('0' + (bits & 1u)));
    bits >>= 1;
  }
  os << env;
  return os.str();
}

namespace {

// sum_k c_k * P_k placed on environment qubit k, padded by identities.
Matrix env_single_site_sum(const SpinBathSpec& spec, const RealVector& weights,
                           const Matrix& site_op) {
  const Index de = spec.dim_e();
  Matrix out = Matrix::Zero(de, de);
  for (int k = 1; k <= spec.n_env; ++k) {
    if (weights(k - 1) == 0.0) continue;
    Matrix term = Matrix::Identity(1, 1);
    for (int j = 1; j <= spec.n_env; ++j) {
      term = tensor_product(term, j == k ? site_op : identity(2), spec.dim_budget);
    }
    out += weights(k - 1) * term;
  }
  return out;
}

}  // namespace

Matrix env_operator_z(const SpinBathSpec& spec) {
  return env_single_site_sum(spec, spec.z, pauli_z());
}

Matrix env_operator_x(const SpinBathSpec& spec) {
  return env_single_site_sum(spec, spec.x, pauli_x());
}

double f_env(const SpinBathSpec& spec, std::uint32_t env_bits) {
  double f = 0.0;
  for (int k = 1; k <= spec.n_env; ++k) {
    f += (spec.bit(env_bits, k) ? -1.0 : 1.0) * spec.y(k - 1);
  }
  return f;
}

ZurekModel build_zurek(const SpinBathSpec& spec) {
  spec.validate();
  if (spec.mu != 0.0 || (spec.x.size() && spec.x.cwiseAbs().maxCoeff() != 0.0)) {
    throw ValidationError("build_zurek requires mu = 0 and X = 0");
  }
  ZurekModel model;
  model.h_tot = tensor_product(pauli_z(), env_operator_z(spec), spec.dim_budget);
  const Index de = spec.dim_e();
  model.labels.reserve(2 * de);
  model.energies = RealVector::Zero(2 * de);
  for (int ns = 0; ns < 2; ++ns) {
    for (std::uint32_t e = 0; e < static_cast<std::uint32_t>(de); ++e) {
      double sum = 0.0;
      for (int k = 1; k <= spec.n_env; ++k) {
        sum += (spec.bit(e, k) ? -1.0 : 1.0) * spec.z(k - 1);
      }
      const Index flat = CompositeIndex::flat(ns, e, de);
      model.energies(flat) = (ns ? -1.0 : 1.0) * sum;
      model.labels.push_back(NaturalLabel{ns, e});
    }
  }
  return model;
}

DensityMatrix zurek_exact_solution(const DensityMatrix& rho0, double t,
                                   const SpinBathSpec& spec) {
  ZurekModel model = build_zurek(spec);
  const Index n = spec.dim();
  if (rho0.dim() != n) {
    throw DimensionError("zurek_exact_solution: state dimension mismatch");
  }
  Matrix out(n, n);
  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n; ++q) {
      out(p, q) = std::exp(Complex(0.0, -(model.energies(p) - model.energies(q)) * t)) *
                  rho0.op(p, q);
    }
  }
  return DensityMatrix(std::move(out), rho0.tolerance);
}

Matrix build_extended(const SpinBathSpec& spec) {
  spec.validate();
  return spec.mu * tensor_product(pauli_x(), identity(spec.dim_e()), spec.dim_budget) +
         tensor_product(pauli_z(), env_operator_z(spec) + env_operator_x(spec),
                        spec.dim_budget);
}

namespace {

// Eigenvector of X_k sigma_x + Z_k sigma_z with eigenvalue (-1)^{n} Y_k; the
// printed column (Z + (-1)^n Y, X) normalized, or its analytic limit when
// the column degenerates (X_k = 0).
Vector chi_column(double x, double z, int n) {
  const double y = std::hypot(x, z);
  Vector col(2);
  if (y <= 1e-300) {
    // Zero site operator: any basis diagonalizes it; use the natural one.
    col << Complex(n ? 0.0 : 1.0, 0.0), Complex(n ? 1.0 : 0.0, 0.0);
    return col;
  }
  col << Complex(z + (n ? -1.0 : 1.0) * y, 0.0), Complex(x, 0.0);
  const double norm = col.norm();
  if (norm > 1e-12 * std::max(1.0, y)) {
    return col / norm;
  }
  // Degenerate printed column: take the unit vector orthogonal to the other
  // eigenvector, phase-fixed to a real positive leading component.
  Vector other(2);
  other << Complex(z + (n ? 1.0 : -1.0) * y, 0.0), Complex(x, 0.0);
  other /= other.norm();
  Vector perp(2);
  perp << -std::conj(other(1)), std::conj(other(0));
  const double floor = 1e-12;
  Index first = std::abs(perp(0)) > floor ? 0 : 1;
  const Complex lead = perp(first);
  perp *= std::conj(lead) / std::abs(lead);
  return perp;
}

Matrix env_chi_basis(const SpinBathSpec& spec) {
  Matrix u = Matrix::Identity(1, 1);
  for (int k = 1; k <= spec.n_env; ++k) {
    Matrix site(2, 2);
    site.col(0) = chi_column(spec.x(k - 1), spec.z(k - 1), 0);
    site.col(1) = chi_column(spec.x(k - 1), spec.z(k - 1), 1);
    u = tensor_product(u, site, spec.dim_budget);
  }
  return u;
}

Matrix case_flip_g1(const SpinBathSpec& spec, bool weight_is_f, double mu) {
  const Index de = spec.dim_e();
  const Index n = 2 * de;
  Matrix g1 = Matrix::Zero(n, n);
  for (std::uint32_t e = 0; e < static_cast<std::uint32_t>(de); ++e) {
    const double w = weight_is_f ? f_env(spec, e) : mu;
    const Index p0 = CompositeIndex::flat(0, e, de);
    const Index p1 = CompositeIndex::flat(1, e, de);
    g1(p0, p1) = w;
    g1(p1, p0) = w;
  }
  return g1;
}

}  // namespace

CaseSesr sesr_for_case(const SpinBathSpec& spec, SesrCase sesr_case) {
  spec.validate(sesr_case == SesrCase::four);
  const Index de = spec.dim_e();
  const Index n = 2 * de;

  CaseSesr out;
  out.basis.dim_s = 2;
  out.basis.dim_e = de;
  out.basis.env_vectors = env_chi_basis(spec);
  out.basis.product_form = true;
  out.basis.energies = RealVector::Zero(n);

  const Matrix b_env = env_operator_z(spec) + env_operator_x(spec);

  if (sesr_case == SesrCase::one) {
    Matrix u_s(2, 2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    u_s << inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2;
    out.basis.system_vectors = u_s;

    out.split.h_s0 = spec.mu * pauli_x();
    out.split.h_e0 = Matrix::Zero(de, de);
    out.split.h_tot1 = tensor_product(pauli_z(), b_env, spec.dim_budget);

    for (int ns = 0; ns < 2; ++ns) {
      for (Index v = 0; v < de; ++v) {
        out.basis.energies(CompositeIndex::flat(ns, v, de)) = (ns ? -1.0 : 1.0) * spec.mu;
      }
    }
    out.pert.g1 = case_flip_g1(spec, /*weight_is_f=*/true, spec.mu);
  } else {
    out.basis.system_vectors = identity(2);

    // Redivided split: H_tot0' = sigma_z (x) (B_x + B_z), H_tot1' = mu sigma_x (x) I.
    out.split.h_s0 = Matrix::Zero(2, 2);
    out.split.h_e0 = Matrix::Zero(de, de);
    out.split.coupling.terms.push_back({pauli_z(), b_env});
    out.split.h_tot1 = spec.mu * tensor_product(pauli_x(), identity(de), spec.dim_budget);

    for (int ns = 0; ns < 2; ++ns) {
      for (std::uint32_t e = 0; e < static_cast<std::uint32_t>(de); ++e) {
        out.basis.energies(CompositeIndex::flat(ns, e, de)) =
            (ns ? -1.0 : 1.0) * f_env(spec, e);
      }
    }
    out.pert.g1 = case_flip_g1(spec, /*weight_is_f=*/false, spec.mu);
  }

  out.basis.basis_change =
      tensor_product(out.basis.system_vectors, out.basis.env_vectors, spec.dim_budget);
  out.pert.h1_diag = RealVector::Zero(n);
  out.pert.improved_energies = out.basis.energies;
  out.pert.improved_order = 1;
  return out;
}

double improved_energy_case(const SpinBathSpec& spec, SesrCase sesr_case, int n_s,
                            std::uint32_t env_bits) {
  const double sign = n_s ? -1.0 : 1.0;
  const double f = f_env(spec, env_bits);
  double big = 0.0, small = 0.0;
  if (sesr_case == SesrCase::one) {
    big = spec.mu;
    small = f;
  } else {
    big = f;
    small = spec.mu;
  }
  if (big == 0.0) {
    throw DegeneracyError("improved_energy_case: vanishing denominator (" +
                          std::string(sesr_case == SesrCase::one ? "mu" : "f") + " = 0)");
  }
  return sign * (big + small * small / (2.0 * big) -
                 std::pow(small, 4) / (8.0 * big * big * big));
}

double printed_bracket_energy(const SpinBathSpec& spec, SesrCase sesr_case, int n_s,
                              std::uint32_t env_bits) {
  const double sign = n_s ? -1.0 : 1.0;
  const double f = f_env(spec, env_bits);
  const double big = sesr_case == SesrCase::one ? spec.mu : f;
  const double small = sesr_case == SesrCase::one ? f : spec.mu;
  if (big == 0.0) {
    throw DegeneracyError("printed_bracket_energy: vanishing denominator");
  }
  const double r = small / (2.0 * big);
  return sign * big * (1.0 + 0.5 * r * r - 0.5 * std::pow(r, 4));
}

Matrix case_one_density_orders(const DensityMatrix& rho0_tot, double t,
                               const SpinBathSpec& spec, int order) {
  if (order < 0 || order > 2) {
    throw ValidationError("case_one_density_orders: order must be 0, 1, or 2");
  }
  if (spec.mu == 0.0) {
    throw DegeneracyError("case_one_density_orders requires mu != 0");
  }
  const CaseSesr cs = sesr_for_case(spec, SesrCase::one);
  const Index de = spec.dim_e();
  const Index n = 2 * de;
  if (rho0_tot.dim() != n) {
    throw DimensionError("case_one_density_orders: state dimension mismatch");
  }
  const Matrix w = cs.basis.basis_change.adjoint() * rho0_tot.op * cs.basis.basis_change;

  RealVector etil(n);
  std::vector<Complex> ph(n);
  for (int ns = 0; ns < 2; ++ns) {
    for (std::uint32_t e = 0; e < static_cast<std::uint32_t>(de); ++e) {
      const Index flat = CompositeIndex::flat(ns, e, de);
      etil(flat) = improved_energy_case(spec, SesrCase::one, ns, e);
    }
  }
  for (Index p = 0; p < n; ++p) ph[p] = std::exp(Complex(0.0, -etil(p) * t));

  auto flip = [&](Index p) {
    const auto ci = CompositeIndex::from_flat(p, de);
    return CompositeIndex::flat(1 - ci.gamma, ci.v, de);
  };
  auto f_of = [&](Index p) {
    return f_env(spec, static_cast<std::uint32_t>(CompositeIndex::from_flat(p, de).v));
  };
  auto sign_of = [&](Index p) {
    return CompositeIndex::from_flat(p, de).gamma ? -1.0 : 1.0;
  };

  Matrix out = Matrix::Zero(n, n);
  const double inv2mu = 1.0 / (2.0 * spec.mu);
  for (Index m = 0; m < n; ++m) {
    for (Index q = 0; q < n; ++q) {
      const Complex w0 = w(m, q);
      if (w0 == Complex(0.0, 0.0)) continue;
      const Index mf = flip(m);
      const Index qf = flip(q);
      switch (order) {
        case 0:
          out(m, q) += ph[m] * std::conj(ph[q]) * w0;
          break;
        case 1:
          out(m, qf) += (ph[m] * std::conj(ph[q]) - ph[m] * std::conj(ph[qf])) *
                        (sign_of(q) * f_of(q) * inv2mu) * w0;
          out(mf, q) += (ph[m] * std::conj(ph[q]) - ph[mf] * std::conj(ph[q])) *
                        (sign_of(m) * f_of(m) * inv2mu) * w0;
          break;
        case 2: {
          const double wq = f_of(q) * inv2mu;
          const double wm = f_of(m) * inv2mu;
          out(m, q) -= (ph[m] * std::conj(ph[q]) - ph[m] * std::conj(ph[qf])) * (wq * wq) * w0;
          out(m, q) -= (ph[m] * std::conj(ph[q]) - ph[mf] * std::conj(ph[q])) * (wm * wm) * w0;
          out(mf, qf) += (ph[m] - ph[mf]) * std::conj(ph[q] - ph[qf]) *
                         (sign_of(m) * sign_of(q) * f_of(m) * f_of(q) * inv2mu * inv2mu) * w0;
          break;
        }
        default:
          break;
      }
    }
  }
  return out;
}

}  // namespace oqdyn

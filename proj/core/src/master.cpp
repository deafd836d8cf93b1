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

#include "oqdyn/master.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "oqdyn/propagator.hpp"

namespace oqdyn {

DensityMatrix FactorizedInitialState::rho_tot(Index dim_budget) const {
  return DensityMatrix(tensor_product(rho_s0.op, rho_e0.op, dim_budget),
                       std::max(rho_s0.tolerance, rho_e0.tolerance));
}

DensityMatrix thermal_state(const Matrix& h_e, const ThermalParams& params) {
  if (params.beta_B < 0.0) {
    throw ValidationError("thermal_state: beta_B must be nonnegative");
  }
  Eigh eig = hermitian_eigendecomposition(h_e);
  const Index n = eig.eigenvalues.size();
  const double e_min = eig.eigenvalues.minCoeff();
  RealVector weights(n);
  for (Index i = 0; i < n; ++i) {
    weights(i) = std::exp(-params.beta_B * (eig.eigenvalues(i) - e_min));
  }
  weights /= weights.sum();
  Matrix rho = eig.eigenvectors * weights.cast<Complex>().asDiagonal() *
               eig.eigenvectors.adjoint();
  return DensityMatrix(hermitize(rho));
}

namespace {

// int_0^t exp(i omega tau) dtau, series branch near omega t = 0.
Complex phase_integral(double omega, double t) {
  const double wt = omega * t;
  if (std::abs(wt) < 1e-4) {
    const Complex iwt(0.0, wt);
    return t * (1.0 + iwt / 2.0 + iwt * iwt / 6.0 + iwt * iwt * iwt / 24.0);
  }
  return (std::exp(Complex(0.0, wt)) - 1.0) / Complex(0.0, omega);
}

}  // namespace

MasterModel::MasterModel(Matrix h_s, Matrix h_e, std::vector<CouplingTerm> coupling,
                         FactorizedInitialState init, MasterConfig cfg, Index dim_budget)
    : h_s_(std::move(h_s)),
      h_e_(std::move(h_e)),
      coupling_(std::move(coupling)),
      init_(std::move(init)),
      cfg_(cfg),
      dim_budget_(dim_budget) {
  if (h_s_.rows() != h_s_.cols() || h_e_.rows() != h_e_.cols()) {
    throw DimensionError("MasterModel: factor Hamiltonians must be square");
  }
  if (dim() > dim_budget_) {
    throw BudgetError("dimension budget exceeded: " + std::to_string(dim()) + " > " +
                      std::to_string(dim_budget_));
  }
  if (init_.rho_s0.dim() != dim_s() || init_.rho_e0.dim() != dim_e()) {
    throw DimensionError("MasterModel: initial state dimension mismatch");
  }
  sys_ = hermitian_eigendecomposition(h_s_);
  env_ = hermitian_eigendecomposition(h_e_);

  energies_ = RealVector::Zero(dim());
  for (Index g = 0; g < dim_s(); ++g) {
    for (Index v = 0; v < dim_e(); ++v) {
      energies_(CompositeIndex::flat(g, v, dim_e())) =
          sys_.eigenvalues(g) + env_.eigenvalues(v);
    }
  }

  Matrix h_se_comp = Matrix::Zero(dim(), dim());
  for (const auto& term : coupling_) {
    if (term.system_op.rows() != dim_s() || term.env_op.rows() != dim_e()) {
      throw DimensionError("MasterModel: coupling term dimension mismatch");
    }
    h_se_comp += tensor_product(term.system_op, term.env_op, dim_budget_);
  }
  if (hermiticity_defect(h_se_comp) >
      1e-10 * std::max(1.0, h_se_comp.cwiseAbs().maxCoeff())) {
    throw NumericsError("MasterModel: H_SE is not hermitian");
  }
  const Matrix u = tensor_product(sys_.eigenvectors, env_.eigenvectors, dim_budget_);
  h_se_ = hermitize(u.adjoint() * h_se_comp * u);
  h1_diag_ = h_se_.diagonal().real();
  g1_ = h_se_;
  g1_.diagonal().setZero();
  energies_prime_ = energies_ + h1_diag_;

  improved_ = energies_prime_;
  if (cfg_.truncation == MasterTruncation::improved_second_order &&
      cfg_.improved_energy_order >= 2) {
    PerturbationData pert;
    pert.h1_diag = RealVector::Zero(dim());
    pert.g1 = g1_;
    improved_ = improved_energies(pert, energies_prime_, cfg_.improved_energy_order);
  }

  rho_e_tilde_ = env_.eigenvectors.adjoint() * init_.rho_e0.op * env_.eigenvectors;
  rho_s_tilde_ = sys_.eigenvectors.adjoint() * init_.rho_s0.op * sys_.eigenvectors;
}

Matrix MasterModel::h_tot() const {
  Matrix h = tensor_product(h_s_, identity(dim_e()), dim_budget_) +
             tensor_product(identity(dim_s()), h_e_, dim_budget_);
  for (const auto& term : coupling_) {
    h += tensor_product(term.system_op, term.env_op, dim_budget_);
  }
  return h;
}

Matrix MasterModel::varrho_env(double t) const {
  const Index de = dim_e();
  Matrix out(de, de);
  for (Index u = 0; u < de; ++u) {
    for (Index v = 0; v < de; ++v) {
      out(u, v) = std::exp(Complex(0.0, -(env_.eigenvalues(u) - env_.eigenvalues(v)) * t)) *
                  rho_e_tilde_(u, v);
    }
  }
  return out;
}

Matrix MasterModel::j_operator(double t) const {
  const Matrix varrho = varrho_env(t);
  Matrix j = Matrix::Zero(dim_s(), dim_s());
  for (const auto& term : coupling_) {
    const Matrix b_tilde =
        env_.eigenvectors.adjoint() * term.env_op * env_.eigenvectors;
    const Complex mean = (b_tilde * varrho).trace();
    Matrix s_tilde = sys_.eigenvectors.adjoint() * term.system_op * sys_.eigenvectors;
    if (cfg_.j_interaction_picture) {
      for (Index a = 0; a < dim_s(); ++a) {
        for (Index b = 0; b < dim_s(); ++b) {
          s_tilde(a, b) *=
              std::exp(Complex(0.0, -(sys_.eigenvalues(a) - sys_.eigenvalues(b)) * t));
        }
      }
    }
    j += mean * s_tilde;
  }
  return hermitize(j);
}

double MasterModel::app1_defect(double t) const {
  const Index n = dim();
  Matrix h_int(n, n);
  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n; ++q) {
      h_int(p, q) = std::exp(Complex(0.0, (energies_(p) - energies_(q)) * t)) * h_se_(p, q);
    }
  }
  const Matrix rho0 = tensor_product(rho_s_tilde_, rho_e_tilde_, dim_budget_);
  const Matrix traced = partial_trace_env(commutator(h_int, rho0), dim_s(), dim_e());
  return traced.norm();
}

Matrix MasterModel::series_term(int k, double t) const {
  SesrBasis basis;
  basis.dim_s = dim_s();
  basis.dim_e = dim_e();
  basis.energies = energies_;
  SeriesConfig cfg;
  cfg.max_order_exact = std::max(k, 1);
  return exact_term(k, basis, h_se_, t, cfg).matrix;
}

Matrix MasterModel::improved_series_term(int k, double t) const {
  if (k < 0 || k > 1) {
    throw ValidationError("improved_series_term: only orders 0 and 1 enter the "
                          "improved master equation");
  }
  SesrBasis basis;
  basis.dim_s = dim_s();
  basis.dim_e = dim_e();
  basis.energies = energies_prime_;
  PerturbationData pert;
  pert.h1_diag = RealVector::Zero(dim());
  pert.g1 = g1_;
  pert.improved_energies = improved_;
  pert.improved_order = cfg_.improved_energy_order;
  SeriesConfig cfg;
  cfg.improved = true;
  cfg.improved_energy_order = cfg_.improved_energy_order;
  return improved_term(k, basis, pert, t, cfg).matrix;
}

Matrix MasterModel::to_system_eigenbasis(const Matrix& rho_computational) const {
  return sys_.eigenvectors.adjoint() * rho_computational * sys_.eigenvectors;
}

Matrix MasterModel::from_system_eigenbasis(const Matrix& rho_eigen) const {
  return sys_.eigenvectors * rho_eigen * sys_.eigenvectors.adjoint();
}

EnvSideOperator env_side_operator(EnvSideKind kind, int order, double t, Index beta,
                                  Index beta_prime, const MasterModel& model) {
  const Index de = model.dim_e();
  EnvSideOperator out;
  out.kind = kind;
  out.order = order;
  out.beta = beta;
  out.beta_prime = beta_prime;
  out.time = t;
  out.matrix = Matrix::Zero(de, de);
  if (kind == EnvSideKind::left) {
    const Matrix a = model.series_term(order, t);
    for (Index u = 0; u < de; ++u) {
      for (Index up = 0; up < de; ++up) {
        const Index row = CompositeIndex::flat(beta, u, de);
        const Index col = CompositeIndex::flat(beta_prime, up, de);
        out.matrix(u, up) =
            a(row, col) * std::exp(Complex(0.0, model.energies()(col) * t));
      }
    }
  } else {
    const Matrix a = model.series_term(order, -t);
    for (Index v = 0; v < de; ++v) {
      for (Index vp = 0; vp < de; ++vp) {
        const Index row = CompositeIndex::flat(beta, v, de);
        const Index col = CompositeIndex::flat(beta_prime, vp, de);
        out.matrix(v, vp) =
            std::exp(Complex(0.0, -model.energies()(row) * t)) * a(row, col);
      }
    }
  }
  return out;
}

Complex coefficient_C(int m, int k, int l, double t, Index beta, Index beta_prime,
                      Index gamma, Index gamma_prime, const MasterModel& model) {
  if (m < 0 || m >= static_cast<int>(model.coupling().size())) {
    throw ValidationError("coefficient_C: coupling index out of range");
  }
  const Matrix b_tilde = model.env_eig().eigenvectors.adjoint() *
                         model.coupling()[m].env_op * model.env_eig().eigenvectors;
  const EnvSideOperator left = env_side_operator(EnvSideKind::left, k, t, beta, beta_prime, model);
  const EnvSideOperator right =
      env_side_operator(EnvSideKind::right, l, t, gamma, gamma_prime, model);
  return (b_tilde * left.matrix * model.varrho_env(t) * right.matrix).trace();
}

Complex coefficient_K(int k, int l, double t, Index beta, Index beta_prime, Index gamma,
                      Index gamma_prime, const MasterModel& model) {
  const EnvSideOperator left = env_side_operator(EnvSideKind::left, k, t, beta, beta_prime, model);
  const EnvSideOperator right =
      env_side_operator(EnvSideKind::right, l, t, gamma, gamma_prime, model);
  return (left.matrix * model.varrho_env(t) * right.matrix).trace();
}

namespace {

// X_k(t) = A_k(t) e^{+i H_tot0 t}: the composite left-decomposition operator.
Matrix decomposed_left(const MasterModel& model, int k, double t, bool improved) {
  Matrix a = improved ? model.improved_series_term(k, t) : model.series_term(k, t);
  const RealVector& e = model.energies();
  for (Index q = 0; q < a.cols(); ++q) {
    a.col(q) *= std::exp(Complex(0.0, e(q) * t));
  }
  return a;
}

Matrix env_sandwich(const MasterModel& model, const Matrix& left_composite,
                    const Matrix& rho_sys_tilde, const Matrix& varrho,
                    const Matrix& right_composite_adj, const Matrix* b_tilde) {
  Matrix inner = tensor_product(rho_sys_tilde, varrho, kDefaultDimBudget);
  Matrix prod = left_composite * inner * right_composite_adj;
  if (b_tilde) {
    prod = tensor_product(identity(model.dim_s()), *b_tilde, kDefaultDimBudget) * prod;
  }
  return partial_trace_env(prod, model.dim_s(), model.dim_e());
}

struct SecondOrderOperators {
  Matrix j;                      // J(t)
  std::vector<Matrix> c_left;    // C_Lm^(1)
  std::vector<Matrix> c_right;   // C_Rm^(1)
  Matrix l_op;                   // L^(1)
  Matrix r_op;                   // R^(1)
  std::vector<Matrix> s_tilde;   // S_m in the system eigenbasis
};

SecondOrderOperators build_second_order(const MasterModel& model, double t, bool improved_a1) {
  SecondOrderOperators ops;
  ops.j = model.j_operator(t);
  const Matrix x1 = decomposed_left(model, 1, t, improved_a1);
  const Matrix x1_adj = x1.adjoint();
  const Matrix varrho = model.varrho_env(t);
  const Matrix id_s = identity(model.dim_s());
  for (const auto& term : model.coupling()) {
    const Matrix b_tilde = model.env_eig().eigenvectors.adjoint() * term.env_op *
                           model.env_eig().eigenvectors;
    ops.c_left.push_back(env_sandwich(model, x1, id_s, varrho, identity(model.dim()),
                                      &b_tilde));
    // C_Rm^(1) = Tr_E[(I (x) varrho) X_1^dagger (I (x) B_m)]; move B_m in front
    // of the trace cyclically over the environment factor only: keep literal.
    Matrix inner = tensor_product(id_s, varrho, kDefaultDimBudget);
    Matrix prod = inner * x1_adj *
                  tensor_product(id_s, b_tilde, kDefaultDimBudget);
    ops.c_right.push_back(partial_trace_env(prod, model.dim_s(), model.dim_e()));
    ops.s_tilde.push_back(model.system_eig().eigenvectors.adjoint() * term.system_op *
                          model.system_eig().eigenvectors);
  }
  ops.l_op = env_sandwich(model, x1, id_s, varrho, identity(model.dim()), nullptr);
  {
    Matrix inner = tensor_product(id_s, varrho, kDefaultDimBudget);
    ops.r_op = partial_trace_env(inner * x1_adj, model.dim_s(), model.dim_e());
  }
  return ops;
}

Matrix system_hamiltonian_diag(const MasterModel& model) {
  return model.system_eig().eigenvalues.cast<Complex>().asDiagonal();
}

}  // namespace

Matrix rhs_perturbed(const DensityMatrix& rho_s, double t, const MasterModel& model) {
  const Matrix rho = model.to_system_eigenbasis(rho_s.op);
  const SecondOrderOperators ops = build_second_order(model, t, /*improved_a1=*/false);
  const Matrix h = system_hamiltonian_diag(model);
  const Complex mi(0.0, -1.0);
  Matrix rhs = mi * commutator(h, rho) + mi * commutator(ops.j, rho);
  for (std::size_t m = 0; m < ops.s_tilde.size(); ++m) {
    rhs += mi * commutator(ops.s_tilde[m], rho * ops.c_right[m] + ops.c_left[m] * rho);
  }
  rhs += Complex(0.0, 1.0) * commutator(ops.j, rho * ops.r_op + ops.l_op * rho);
  return model.from_system_eigenbasis(rhs);
}

Matrix rhs_perturbed_app1(const DensityMatrix& rho_s, double t, const MasterModel& model) {
  const Matrix rho = model.to_system_eigenbasis(rho_s.op);
  const SecondOrderOperators ops = build_second_order(model, t, /*improved_a1=*/false);
  const Matrix h = system_hamiltonian_diag(model);
  const Complex mi(0.0, -1.0);
  Matrix rhs = mi * commutator(h, rho);
  for (std::size_t m = 0; m < ops.s_tilde.size(); ++m) {
    rhs += mi * commutator(ops.s_tilde[m], rho * ops.c_right[m] + ops.c_left[m] * rho);
  }
  return model.from_system_eigenbasis(rhs);
}

Matrix rhs_improved(const DensityMatrix& rho_s, double t, const MasterModel& model) {
  const Matrix rho = model.to_system_eigenbasis(rho_s.op);
  const Matrix varrho = model.varrho_env(t);
  const Matrix id_s = identity(model.dim_s());
  const Matrix j = model.j_operator(t);

  std::array<Matrix, 2> x;
  for (int a = 0; a <= 1; ++a) x[a] = decomposed_left(model, a, t, /*improved=*/true);

  std::vector<Matrix> s_tilde, cil0, cir0, cil1, cir1;
  for (const auto& term : model.coupling()) {
    const Matrix b_tilde = model.env_eig().eigenvectors.adjoint() * term.env_op *
                           model.env_eig().eigenvectors;
    s_tilde.push_back(model.system_eig().eigenvectors.adjoint() * term.system_op *
                      model.system_eig().eigenvectors);
    const Matrix ib = tensor_product(id_s, b_tilde, kDefaultDimBudget);
    const Matrix ive = tensor_product(id_s, varrho, kDefaultDimBudget);
    cil0.push_back(partial_trace_env(ib * x[0] * ive, model.dim_s(), model.dim_e()));
    cil1.push_back(partial_trace_env(ib * x[1] * ive, model.dim_s(), model.dim_e()));
    cir0.push_back(partial_trace_env(ive * x[0].adjoint() * ib, model.dim_s(), model.dim_e()));
    cir1.push_back(partial_trace_env(ive * x[1].adjoint() * ib, model.dim_s(), model.dim_e()));
  }
  const Matrix ive = tensor_product(id_s, varrho, kDefaultDimBudget);
  const Matrix li = partial_trace_env(x[1] * ive, model.dim_s(), model.dim_e());
  const Matrix ri = partial_trace_env(ive * x[1].adjoint(), model.dim_s(), model.dim_e());

  const Matrix h = system_hamiltonian_diag(model);
  const Complex mi(0.0, -1.0);
  const Complex pi_(0.0, 1.0);
  Matrix rhs = mi * commutator(h, rho) + pi_ * commutator(j, rho);
  for (std::size_t m = 0; m < s_tilde.size(); ++m) {
    rhs += mi * commutator(s_tilde[m], rho * cir0[m] + cil0[m] * rho);
    rhs += mi * commutator(s_tilde[m], rho * cir1[m] + cil1[m] * rho);
  }
  rhs += mi * commutator(j, rho * ri + li * rho);
  for (std::size_t m = 0; m < s_tilde.size(); ++m) {
    rhs += pi_ * commutator(s_tilde[m], cil0[m] * rho * ri + cil0[m] * li * rho +
                                            rho * ri * cir0[m] + li * rho * cir0[m]);
  }
  return model.from_system_eigenbasis(rhs);
}

Matrix rhs_redfield(const DensityMatrix& rho_s_interaction, double t,
                    const MasterModel& model) {
  const double defect = model.app1_defect(t);
  const double scale = std::max(1.0, model.initial_state().rho_s0.op.norm());
  if (defect > 1e-10 * scale) {
    throw Error("Redfield assumption violated: ||Tr_E[H~_SE, rho_tot(0)]|| = " +
                std::to_string(defect) + "; use rhs_perturbed instead");
  }
  const Index n = model.dim();
  const RealVector& e = model.energies();
  const Matrix& h_se = model.h_se_isesr();

  // H~_SE(t) and the closed-form tau integral of H~_SE(tau), elementwise.
  Matrix h_t(n, n), h_int(n, n);
  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n; ++q) {
      const double omega = e(p) - e(q);
      h_t(p, q) = std::exp(Complex(0.0, omega * t)) * h_se(p, q);
      h_int(p, q) = phase_integral(omega, t) * h_se(p, q);
    }
  }
  const Matrix rho = model.to_system_eigenbasis(rho_s_interaction.op);
  const Matrix w = tensor_product(rho, model.rho_env_tilde(), kDefaultDimBudget);
  const Matrix rhs =
      -partial_trace_env(commutator(h_t, commutator(h_int, w)), model.dim_s(), model.dim_e());
  return model.from_system_eigenbasis(rhs);
}

Matrix dropped_terms_app1(const DensityMatrix& rho_s, double t, const MasterModel& model) {
  const Matrix rho = model.to_system_eigenbasis(rho_s.op);
  const Matrix j = model.j_operator(t);
  const Index n = model.dim();
  const RealVector& e = model.energies();
  const Matrix& h_se = model.h_se_isesr();

  // int_0^t H-bar_SE(tau) dtau with H-bar(tau) = e^{-i H0 tau} H_SE e^{+i H0 tau}.
  Matrix h_bar_int(n, n);
  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n; ++q) {
      h_bar_int(p, q) = phase_integral(-(e(p) - e(q)), t) * h_se(p, q);
    }
  }
  const Matrix w = tensor_product(rho, model.rho_env_tilde(), kDefaultDimBudget);
  const Matrix g =
      partial_trace_env(commutator(h_bar_int, w), model.dim_s(), model.dim_e());
  const Matrix out = Complex(0.0, 1.0) * commutator(j, rho) + commutator(j, g);
  return model.from_system_eigenbasis(out);
}

Matrix rhs_exact_truncated(const DensityMatrix& rho_s, double t, const MasterModel& model) {
  const MasterConfig& cfg = model.config();
  const int cap = cfg.exact_order_cap;
  const int depth = cfg.exact_depth;
  if (cap < 1 || cap > 4) {
    throw ValidationError("rhs_exact_truncated: order cap must be in [1, 4]");
  }
  if (depth < 0 || depth > 3) {
    throw ValidationError("rhs_exact_truncated: iterative depth must be in [0, 3]");
  }
  const Index ds = model.dim_s();
  const Index de = model.dim_e();
  const Matrix rho = model.to_system_eigenbasis(rho_s.op);
  const Matrix varrho = model.varrho_env(t);

  std::vector<Matrix> x(cap);  // X_k = A_k(t) e^{+i H_tot0 t}, k <= cap - 1
  for (int k = 0; k < cap; ++k) x[k] = decomposed_left(model, k, t, /*improved=*/false);

  auto k_super = [&](int j, const Matrix& mat) {
    Matrix acc = Matrix::Zero(ds, ds);
    for (int k = 0; k <= j; ++k) {
      const int l = j - k;
      const Matrix inner = tensor_product(mat, varrho, kDefaultDimBudget);
      acc += partial_trace_env(x[k] * inner * x[l].adjoint(), ds, de);
    }
    return acc;
  };

  // total[n] = rho delta_{n0} + sum_{M>=1} (-1)^M (K^M restricted to total order n).
  std::vector<Matrix> total(cap, Matrix::Zero(ds, ds));
  std::vector<Matrix> current(cap, Matrix::Zero(ds, ds));
  std::vector<bool> has(cap, false);
  total[0] = rho;
  current[0] = rho;
  has[0] = true;
  for (int m = 1; m <= depth; ++m) {
    std::vector<Matrix> next(cap, Matrix::Zero(ds, ds));
    std::vector<bool> next_has(cap, false);
    for (int ord = 0; ord < cap; ++ord) {
      if (!has[ord]) continue;
      for (int j = 1; ord + j < cap; ++j) {
        next[ord + j] += k_super(j, current[ord]);
        next_has[ord + j] = true;
      }
    }
    const double sign = (m % 2 == 1) ? -1.0 : 1.0;
    for (int ord = 0; ord < cap; ++ord) {
      if (next_has[ord]) total[ord] += sign * next[ord];
    }
    current = std::move(next);
    has = std::move(next_has);
  }

  const Matrix h = system_hamiltonian_diag(model);
  const Complex mi(0.0, -1.0);
  Matrix rhs = mi * commutator(h, rho);
  const Matrix id_s = identity(ds);
  for (const auto& term : model.coupling()) {
    const Matrix b_tilde = model.env_eig().eigenvectors.adjoint() * term.env_op *
                           model.env_eig().eigenvectors;
    const Matrix s_tilde = model.system_eig().eigenvectors.adjoint() * term.system_op *
                           model.system_eig().eigenvectors;
    const Matrix ib = tensor_product(id_s, b_tilde, kDefaultDimBudget);
    for (int k = 0; k < cap; ++k) {
      for (int l = 0; k + l + 1 <= cap; ++l) {
        Matrix arg = Matrix::Zero(ds, ds);
        bool any = false;
        for (int n = 0; k + l + 1 + n <= cap; ++n) {
          arg += total[n];
          any = true;
        }
        if (!any) continue;
        const Matrix inner = tensor_product(arg, varrho, kDefaultDimBudget);
        const Matrix c_term = partial_trace_env(ib * x[k] * inner * x[l].adjoint(), ds, de);
        rhs += mi * commutator(s_tilde, c_term);
      }
    }
  }
  return model.from_system_eigenbasis(rhs);
}

std::vector<TrajectoryPoint> integrate(const RhsFunction& rhs, const DensityMatrix& rho0,
                                       const std::vector<double>& t_grid,
                                       const MasterConfig& cfg, double h_tot_norm) {
  if (t_grid.empty()) return {};
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (t_grid[i] < t_grid[i - 1]) {
      throw ValidationError("integrate: time grid must be monotone");
    }
  }
  const double dt = cfg.dt > 0.0 ? cfg.dt
                                 : std::min(0.01, 0.01 / std::max(h_tot_norm, 1e-12));

  std::vector<TrajectoryPoint> out;
  out.reserve(t_grid.size());
  Matrix rho = rho0.op;
  double t = t_grid.front();
  auto record = [&](double when) {
    TrajectoryPoint point;
    point.t = when;
    point.rho = DensityMatrix(rho, rho0.tolerance);
    point.trace_drift = std::abs(rho.trace() - Complex(1.0, 0.0));
    point.min_eigenvalue = min_eigenvalue(hermitize(rho));
    out.push_back(std::move(point));
  };
  record(t);

  std::int64_t step_index = 0;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double target = t_grid[i];
    const double span = target - t;
    const int substeps = std::max<int>(1, static_cast<int>(std::ceil(span / dt - 1e-12)));
    const double h = span / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double ts = t + s * h;
      const DensityMatrix r0(rho, rho0.tolerance);
      const Matrix k1 = rhs(ts, r0);
      const Matrix k2 = rhs(ts + 0.5 * h, DensityMatrix(rho + 0.5 * h * k1, rho0.tolerance));
      const Matrix k3 = rhs(ts + 0.5 * h, DensityMatrix(rho + 0.5 * h * k2, rho0.tolerance));
      const Matrix k4 = rhs(ts + h, DensityMatrix(rho + h * k3, rho0.tolerance));
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      rho = hermitize(rho);
      ++step_index;
      if (!rho.allFinite()) {
        throw NumericsError("integrate: non-finite state at step " +
                            std::to_string(step_index));
      }
    }
    t = target;
    record(t);
  }
  return out;
}

}  // namespace oqdyn

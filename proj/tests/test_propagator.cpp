#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "oqdyn/models.hpp"
#include "oqdyn/oracle.hpp"
#include "oqdyn/propagator.hpp"
#include "oqdyn/sesr.hpp"
#include "test_rng.hpp"

using namespace oqdyn;

namespace {

// Eigendecomposition-based exp(-i H t), independent of the series machinery.
Matrix expm_minus_iht(const Matrix& h, double t) {
  const Eigh eig = hermitian_eigendecomposition(h);
  Vector phases(eig.eigenvalues.size());
  for (Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::exp(Complex(0.0, -eig.eigenvalues(i) * t));
  }
  return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

// A random nondegenerate diagonal H0 and hermitian H1 on a composite space,
// packaged as a SESR in the computational basis.
struct RandomSeriesProblem {
  SesrBasis basis;
  Matrix h1;
  Matrix h_tot;
};

RandomSeriesProblem random_problem(Index dim_s, Index dim_e, std::mt19937_64& rng,
                                   double h1_scale) {
  RandomSeriesProblem problem;
  problem.basis.dim_s = dim_s;
  problem.basis.dim_e = dim_e;
  const Index n = dim_s * dim_e;
  std::uniform_real_distribution<double> gap(0.4, 1.1);
  problem.basis.energies = RealVector(n);
  double e = -1.3;
  for (Index i = 0; i < n; ++i) {
    problem.basis.energies(i) = e;
    e += gap(rng);
  }
  problem.basis.basis_change = identity(n);
  problem.basis.system_vectors = identity(dim_s);
  problem.basis.env_vectors = identity(dim_e);
  problem.h1 = testing::random_hermitian(n, rng, 1.0);
  problem.h1 *= h1_scale / problem.h1.norm();
  problem.h_tot =
      problem.basis.energies.cast<Complex>().asDiagonal().toDenseMatrix() + problem.h1;
  return problem;
}

}  // namespace

TEST_CASE("order zero is the diagonal phase stamp") {
  std::mt19937_64 rng(61);
  const RandomSeriesProblem problem = random_problem(2, 2, rng, 0.5);
  SeriesConfig cfg;
  const PropagatorTerm a0 = exact_term(0, problem.basis, problem.h1, 1.3, cfg);
  for (Index p = 0; p < 4; ++p) {
    CHECK(std::abs(a0.matrix(p, p) -
                   std::exp(Complex(0.0, -problem.basis.energies(p) * 1.3))) < 1e-15);
    CHECK(std::abs(a0.matrix(p, p)) == doctest::Approx(1.0));
  }
  CHECK((a0.matrix - Matrix(a0.matrix.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("vanishing perturbation kills all higher orders") {
  std::mt19937_64 rng(67);
  RandomSeriesProblem problem = random_problem(2, 2, rng, 0.5);
  problem.h1.setZero();
  SeriesConfig cfg;
  for (int l = 1; l <= 4; ++l) {
    const PropagatorTerm a = exact_term(l, problem.basis, problem.h1, 0.8, cfg);
    CHECK(a.matrix.norm() == 0.0);
  }
}

TEST_CASE("series sums to the matrix exponential") {
  std::mt19937_64 rng(71);
  const double t = 1.0;
  const RandomSeriesProblem problem = random_problem(2, 2, rng, 0.5 / t);
  SeriesConfig cfg;
  cfg.max_order_exact = 6;
  Matrix sum = Matrix::Zero(4, 4);
  for (int l = 0; l <= 6; ++l) {
    sum += exact_term(l, problem.basis, problem.h1, t, cfg).matrix;
  }
  const Matrix exact = expm_minus_iht(problem.h_tot, t);
  CHECK((sum - exact).norm() < 1e-6);
}

TEST_CASE("truncation error decreases monotonically in L") {
  std::mt19937_64 rng(73);
  const double t = 1.0;
  const RandomSeriesProblem problem = random_problem(2, 8, rng, 0.5);
  const Matrix exact = expm_minus_iht(problem.h_tot, t);
  SeriesConfig cfg;
  cfg.max_order_exact = 6;
  Matrix sum = Matrix::Zero(16, 16);
  double prev = std::numeric_limits<double>::infinity();
  for (int l = 0; l <= 5; ++l) {
    sum += exact_term(l, problem.basis, problem.h1, t, cfg).matrix;
    const double err = (sum - exact).norm();
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("path budget is enforced") {
  std::mt19937_64 rng(79);
  const RandomSeriesProblem problem = random_problem(2, 4, rng, 1.0);
  SeriesConfig cfg;
  cfg.max_order_exact = 5;
  cfg.path_budget = 100;
  CHECK_THROWS_AS(exact_term(5, problem.basis, problem.h1, 1.0, cfg), BudgetError);
}

TEST_CASE("improved order zero uses the improved phases") {
  std::mt19937_64 rng(83);
  RandomSeriesProblem problem = random_problem(2, 2, rng, 0.3);
  PerturbationData pert = perturbation_matrix(problem.h1, problem.basis);
  // Strip the diagonal so the redivision precondition holds.
  problem.h1 -= Matrix(pert.h1_diag.cast<Complex>().asDiagonal());
  pert = perturbation_matrix(problem.h1, problem.basis);
  pert.improved_energies = improved_energies(pert, problem.basis.energies, 4);
  pert.improved_order = 4;
  SeriesConfig cfg;
  cfg.improved = true;
  cfg.improved_energy_order = 4;
  const PropagatorTerm a = improved_term(0, problem.basis, pert, 0.7, cfg);
  for (Index p = 0; p < 4; ++p) {
    CHECK(std::abs(a.matrix(p, p) -
                   std::exp(Complex(0.0, -pert.improved_energies(p) * 0.7))) < 1e-15);
  }
}

TEST_CASE("improved terms reduce to exact terms at order one") {
  // With E~ = E (improved_energy_order = 1) and no diagonal, A_I0 = A_0 and
  // A_I1 = A_1; A_I2 differs from A_2 exactly by the secular diagonal that
  // the improved scheme absorbs into the phases.
  std::mt19937_64 rng(89);
  RandomSeriesProblem problem = random_problem(2, 2, rng, 0.4);
  PerturbationData pert0 = perturbation_matrix(problem.h1, problem.basis);
  problem.h1 -= Matrix(pert0.h1_diag.cast<Complex>().asDiagonal());
  PerturbationData pert = perturbation_matrix(problem.h1, problem.basis);
  pert.improved_order = 1;

  SeriesConfig icfg;
  icfg.improved = true;
  icfg.improved_energy_order = 1;
  SeriesConfig ecfg;
  ecfg.max_order_exact = 3;

  const double t = 1.1;
  for (int l : {0, 1}) {
    const Matrix ai = improved_term(l, problem.basis, pert, t, icfg).matrix;
    const Matrix al = exact_term(l, problem.basis, problem.h1, t, ecfg).matrix;
    CHECK((ai - al).cwiseAbs().maxCoeff() < 1e-12);
  }

  const Matrix a2 = exact_term(2, problem.basis, problem.h1, t, ecfg).matrix;
  const Matrix ai2 = improved_term(2, problem.basis, pert, t, icfg).matrix;
  Matrix secular = Matrix::Zero(4, 4);
  for (Index p = 0; p < 4; ++p) {
    Complex g2(0.0, 0.0);
    for (Index r = 0; r < 4; ++r) {
      if (r == p) continue;
      g2 += pert.g1(p, r) * pert.g1(r, p) /
            (problem.basis.energies(p) - problem.basis.energies(r));
    }
    secular(p, p) =
        Complex(0.0, -t) * std::exp(Complex(0.0, -problem.basis.energies(p) * t)) * g2;
  }
  CHECK((a2 - ai2 - secular).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zurek model: improved terms vanish beyond order zero") {
  SpinBathSpec spec;
  spec.n_env = 3;
  spec.z = RealVector(3);
  spec.z << 0.9, 0.4, 0.2;
  spec.x = RealVector::Zero(3);
  const ZurekModel model = build_zurek(spec);

  HamiltonianSplit split;
  split.h_s0 = Matrix::Zero(2, 2);
  split.h_e0 = Matrix::Zero(8, 8);
  split.h_tot1 = model.h_tot;
  const SesrBasis basis0 = build_sesr(split);
  const PerturbationData pert0 = perturbation_matrix(split.h_tot1, basis0);
  const RedivisionResult redivided = hamiltonian_redivision(split, basis0, pert0);

  SeriesConfig cfg;
  cfg.improved = true;
  cfg.improved_energy_order = 1;
  for (int l = 1; l <= 3; ++l) {
    const Matrix ail =
        improved_term(l, redivided.basis, redivided.pert, 2.0, cfg).matrix;
    CHECK(ail.norm() == 0.0);
  }
}

TEST_CASE("evolve_total at t = 0 and with zero coupling") {
  std::mt19937_64 rng(97);
  RandomSeriesProblem problem = random_problem(2, 2, rng, 0.4);
  const DensityMatrix rho0 = testing::random_density(4, rng);
  SeriesConfig cfg;
  cfg.max_order_exact = 4;

  const DensityMatrix at0 = evolve_total(rho0, 0.0, problem.basis, problem.h1, cfg);
  CHECK((at0.op - rho0.op).cwiseAbs().maxCoeff() < 1e-14);

  problem.h1.setZero();
  const double t = 1.7;
  const DensityMatrix free = evolve_total(rho0, t, problem.basis, problem.h1, cfg);
  const Matrix u = expm_minus_iht(
      problem.basis.energies.cast<Complex>().asDiagonal().toDenseMatrix(), t);
  CHECK((free.op - u * rho0.op * u.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("evolve_total matches the oracle on a 2-qubit model") {
  std::mt19937_64 rng(101);
  const double t = 1.0;
  const RandomSeriesProblem problem = random_problem(2, 2, rng, 0.3 / t);
  const DensityMatrix rho0 = testing::random_density(4, rng);
  SeriesConfig cfg;
  cfg.max_order_exact = 4;
  double defect = 0.0;
  const DensityMatrix got =
      evolve_total(rho0, t, problem.basis, problem.h1, cfg, nullptr, &defect);
  const DensityMatrix expect = exact_evolve(problem.h_tot, rho0, t);
  CHECK(trace_distance(got, expect) < 1e-5);
  CHECK(hermiticity_defect(got.op) == 0.0);
  CHECK(std::abs(got.op.trace() - Complex(1.0, 0.0)) < 1e-4);
}

TEST_CASE("evolve_reduced with product state and no coupling is local") {
  std::mt19937_64 rng(103);
  SesrBasis basis;
  basis.dim_s = 2;
  basis.dim_e = 2;
  basis.energies = RealVector(4);
  basis.energies << 1.2, 0.9, -1.2, -1.5;  // E_s = +-1.2, eps = 0, -0.3
  basis.basis_change = identity(4);
  basis.system_vectors = identity(2);
  basis.env_vectors = identity(2);
  const DensityMatrix rho_s = testing::random_density(2, rng);
  const DensityMatrix rho_e = testing::random_density(2, rng);
  const DensityMatrix rho0 = DensityMatrix(tensor_product(rho_s.op, rho_e.op));
  SeriesConfig cfg;
  const double t = 2.1;
  const DensityMatrix got =
      evolve_reduced(rho0, t, basis, Matrix::Zero(4, 4), cfg);
  Matrix h_s = Matrix::Zero(2, 2);
  h_s(0, 0) = 1.2;
  h_s(1, 1) = -1.2;
  const Matrix u = expm_minus_iht(h_s, t);
  CHECK((got.op - u * rho_s.op * u.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("evolve_reduced equals the direct delta-constrained assembly") {
  std::mt19937_64 rng(107);
  const RandomSeriesProblem problem = random_problem(2, 3, rng, 0.5);
  const DensityMatrix rho0 = testing::random_density(6, rng);
  SeriesConfig cfg;
  cfg.max_order_exact = 3;
  const double t = 0.9;
  const DensityMatrix reduced = evolve_reduced(rho0, t, problem.basis, problem.h1, cfg);

  // Direct assembly with the delta_{v v'} constraint on environment labels.
  Matrix direct = Matrix::Zero(2, 2);
  std::vector<Matrix> a(4);
  for (int l = 0; l <= 3; ++l) {
    a[l] = exact_term(l, problem.basis, problem.h1, t, cfg).matrix;
  }
  Matrix s = a[0] + a[1] + a[2] + a[3];
  for (Index g = 0; g < 2; ++g) {
    for (Index gp = 0; gp < 2; ++gp) {
      Complex acc(0.0, 0.0);
      for (Index v = 0; v < 3; ++v) {
        const Index row = g * 3 + v;
        const Index col = gp * 3 + v;
        for (Index bu = 0; bu < 6; ++bu) {
          for (Index bpu = 0; bpu < 6; ++bpu) {
            acc += s(row, bu) * rho0.op(bu, bpu) * std::conj(s(col, bpu));
          }
        }
      }
      direct(g, gp) = acc;
    }
  }
  direct = hermitize(direct);
  CHECK((reduced.op - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zurek dephasing reproduces the closed-form coherence factor") {
  SpinBathSpec spec;
  spec.n_env = 1;
  spec.z = RealVector(1);
  spec.z << 0.8;
  spec.x = RealVector::Zero(1);
  const ZurekModel model = build_zurek(spec);

  HamiltonianSplit split;
  split.h_s0 = Matrix::Zero(2, 2);
  split.h_e0 = Matrix::Zero(2, 2);
  split.h_tot1 = model.h_tot;
  const SesrBasis basis0 = build_sesr(split);
  const PerturbationData pert0 = perturbation_matrix(split.h_tot1, basis0);
  const RedivisionResult redivided = hamiltonian_redivision(split, basis0, pert0);

  Matrix plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  const DensityMatrix rho0 = DensityMatrix(tensor_product(plus, plus));

  SeriesConfig cfg;
  cfg.improved = true;
  cfg.improved_energy_order = 1;
  for (const double t : {0.3, 1.1, 4.0}) {
    const DensityMatrix rho_s = evolve_reduced(rho0, t, redivided.basis,
                                               redivided.split.h_tot1, cfg, &redivided.pert);
    CHECK(std::abs(rho_s.op(0, 1) - Complex(0.5 * std::cos(2.0 * 0.8 * t), 0.0)) < 1e-12);
  }
}

TEST_CASE("improved assembly beats the plain truncation on the two-level toy") {
  SpinBathSpec spec;
  spec.n_env = 1;
  spec.z = RealVector(1);
  spec.z << 0.4;
  spec.x = RealVector(1);
  spec.x << 0.3;
  spec.mu = 2.0;
  const CaseSesr cs = sesr_for_case(spec, SesrCase::one);
  const Matrix h_ext = build_extended(spec);

  std::mt19937_64 rng(109);
  const DensityMatrix rho0 = testing::random_density(4, rng);
  const double t = 5.0;

  PerturbationData pert = cs.pert;
  pert.improved_energies = improved_energies(pert, cs.basis.energies, 4);
  pert.improved_order = 4;
  SeriesConfig icfg;
  icfg.improved = true;
  icfg.improved_energy_order = 4;
  SeriesConfig ecfg;
  ecfg.max_order_exact = 3;

  const Matrix u = cs.basis.basis_change;
  const Matrix w0 = u.adjoint() * rho0.op * u;
  const Matrix h1_sesr = hermitize(u.adjoint() * cs.split.h_tot1 * u);

  auto assemble = [&](const std::vector<Matrix>& terms) {
    Matrix acc = Matrix::Zero(4, 4);
    for (int k = 0; k <= 3; ++k) {
      for (int l = 0; k + l <= 3; ++l) {
        acc += terms[k] * w0 * terms[l].adjoint();
      }
    }
    return partial_trace_env(hermitize(u * acc * u.adjoint()), 2, 2);
  };

  std::vector<Matrix> improved(4), plain(4);
  for (int l = 0; l <= 3; ++l) {
    improved[l] = improved_term(l, cs.basis, pert, t, icfg).matrix;
    plain[l] = exact_term(l, cs.basis, h1_sesr, t, ecfg).matrix;
  }
  const Matrix oracle_reduced =
      partial_trace_env(exact_evolve(h_ext, rho0, t).op, 2, 2);
  const double err_improved = trace_distance(assemble(improved), oracle_reduced);
  const double err_plain = trace_distance(assemble(plain), oracle_reduced);
  CHECK(err_improved < err_plain);
}

TEST_CASE("case one improved evolution error scales as the fourth power") {
  SpinBathSpec spec;
  spec.n_env = 2;
  spec.z = RealVector(2);
  spec.z << 0.4, 0.25;
  spec.x = RealVector(2);
  spec.x << 0.3, 0.2;
  spec.mu = 10.0 * 0.5;  // 10 * max Y_k
  CaseSesr cs = sesr_for_case(spec, SesrCase::one);
  cs.pert.improved_energies = improved_energies(cs.pert, cs.basis.energies, 4);
  cs.pert.improved_order = 4;

  const Matrix h_ext = build_extended(spec);
  Matrix plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  Matrix env0 = Matrix::Zero(2, 2);
  env0(0, 0) = 1.0;
  const DensityMatrix rho0 =
      DensityMatrix(tensor_product(plus, tensor_product(plus, env0)));

  SeriesConfig cfg;
  cfg.improved = true;
  cfg.improved_energy_order = 4;
  const Matrix h1_sesr = hermitize(cs.basis.basis_change.adjoint() * cs.split.h_tot1 *
                                   cs.basis.basis_change);
  const Eigh h_eig = hermitian_eigendecomposition(h_ext);

  double max_err = 0.0;
  double max_f = 0.0;
  for (Index v = 0; v < 4; ++v) {
    max_f = std::max(max_f, std::abs(f_env(spec, static_cast<std::uint32_t>(v))));
  }
  for (int i = 0; i <= 8; ++i) {
    const double t = 2.0 * M_PI / spec.mu * i / 8.0;
    const DensityMatrix got =
        evolve_reduced(rho0, t, cs.basis, h1_sesr, cfg, &cs.pert);
    const Matrix expect = partial_trace_env(exact_evolve(h_eig, rho0, t).op, 2, 4);
    max_err = std::max(max_err, trace_distance(got.op, expect));
  }
  const double ratio = std::pow(max_f / (2.0 * spec.mu), 3);
  CHECK(max_err < 10.0 * ratio);
}

TEST_CASE("improved evolve at t = 0 recovers the state to third order") {
  // The printed third-order term does not vanish at t = 0, so the recovery
  // holds to O(g1^3) rather than exactly.
  SpinBathSpec spec;
  spec.n_env = 1;
  spec.z = RealVector(1);
  spec.z << 0.04;
  spec.x = RealVector(1);
  spec.x << 0.03;
  spec.mu = 2.0;
  CaseSesr cs = sesr_for_case(spec, SesrCase::one);
  cs.pert.improved_energies = improved_energies(cs.pert, cs.basis.energies, 4);
  cs.pert.improved_order = 4;
  std::mt19937_64 rng(113);
  const DensityMatrix rho0 = testing::random_density(4, rng);
  SeriesConfig cfg;
  cfg.improved = true;
  cfg.improved_energy_order = 4;
  const Matrix h1 = hermitize(cs.basis.basis_change.adjoint() * cs.split.h_tot1 *
                              cs.basis.basis_change);
  const DensityMatrix at0 = evolve_total(rho0, 0.0, cs.basis, h1, cfg, &cs.pert);
  const double g_scale = cs.pert.g1.cwiseAbs().maxCoeff();
  CHECK((at0.op - rho0.op).cwiseAbs().maxCoeff() < 10.0 * std::pow(g_scale / spec.mu, 3));
}

#include "doctest.h"

#include <algorithm>
#include <random>
#include <vector>

#include "oqdyn/models.hpp"
#include "oqdyn/sesr.hpp"
#include "test_rng.hpp"

using namespace oqdyn;

namespace {

HamiltonianSplit trivial_split(Index dim_s, Index dim_e, Matrix h_tot1) {
  HamiltonianSplit split;
  split.h_s0 = Matrix::Zero(dim_s, dim_s);
  split.h_e0 = Matrix::Zero(dim_e, dim_e);
  split.h_tot1 = std::move(h_tot1);
  return split;
}

// Hermitian matrix with prescribed eigenvectors and eigenvalues.
Matrix with_spectrum(const Matrix& vectors, const RealVector& values) {
  return vectors * values.cast<Complex>().asDiagonal() * vectors.adjoint();
}

}  // namespace

TEST_CASE("additive spectrum for commuting-free split") {
  HamiltonianSplit split;
  split.h_s0 = pauli_z();
  split.h_e0 = pauli_z();
  split.h_tot1 = Matrix::Zero(4, 4);
  const SesrBasis basis = build_sesr(split);
  std::vector<double> e(basis.energies.begin(), basis.energies.end());
  std::sort(e.begin(), e.end());
  CHECK(e[0] == doctest::Approx(-2.0));
  CHECK(e[1] == doctest::Approx(0.0));
  CHECK(e[2] == doctest::Approx(0.0));
  CHECK(e[3] == doctest::Approx(2.0));
}

TEST_CASE("zurek split through the generic pipeline") {
  SpinBathSpec spec;
  spec.n_env = 2;
  spec.z = RealVector(2);
  spec.z << 1.0, 0.5;
  spec.x = RealVector::Zero(2);
  const ZurekModel model = build_zurek(spec);

  HamiltonianSplit split = trivial_split(2, 4, model.h_tot);
  const SesrBasis basis = build_sesr(split);
  PerturbationData pert = perturbation_matrix(split.h_tot1, basis);
  CHECK(pert.g1.cwiseAbs().maxCoeff() < 1e-14);

  const RedivisionResult redivided = hamiltonian_redivision(split, basis, pert);
  // Natural-basis energies per the closed form, e.g. E_{0,00} = 1.5.
  CHECK(redivided.basis.energies(0) == doctest::Approx(1.5));
  CHECK(redivided.basis.energies(CompositeIndex::flat(1, 0, 4)) == doctest::Approx(-1.5));
  CHECK(redivided.basis.energies(CompositeIndex::flat(0, 1, 4)) == doctest::Approx(0.5));
  CHECK((redivided.basis.energies - model.energies).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(redivided.pert.h1_diag.cwiseAbs().maxCoeff() == 0.0);

  // H_tot0' reconstructs the full Zurek Hamiltonian and H_tot1' vanishes.
  CHECK((redivided.split.h_tot0() - model.h_tot).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(redivided.split.h_tot1.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("random commuting pair against full diagonalization") {
  std::mt19937_64 rng(41);
  const Eigh sys_frame = hermitian_eigendecomposition(testing::random_hermitian(3, rng));
  const Eigh env_frame = hermitian_eigendecomposition(testing::random_hermitian(2, rng));
  RealVector hs_vals(3), s_vals(3), he_vals(2), b_vals(2);
  hs_vals << -1.3, 0.2, 1.9;
  s_vals << 0.7, -0.4, 0.9;
  he_vals << 0.5, 2.1;
  b_vals << -0.8, 0.6;

  HamiltonianSplit split;
  split.h_s0 = with_spectrum(sys_frame.eigenvectors, hs_vals);
  split.h_e0 = with_spectrum(env_frame.eigenvectors, he_vals);
  split.coupling.terms.push_back({with_spectrum(sys_frame.eigenvectors, s_vals),
                                  with_spectrum(env_frame.eigenvectors, b_vals)});
  split.h_tot1 = Matrix::Zero(6, 6);

  const SesrBasis basis = build_sesr(split);
  const Eigh brute = hermitian_eigendecomposition(split.h_tot0());
  std::vector<double> got(basis.energies.begin(), basis.energies.end());
  std::sort(got.begin(), got.end());
  for (Index i = 0; i < 6; ++i) {
    CHECK(std::abs(got[i] - brute.eigenvalues(i)) < 1e-10);
  }
  // Product structure of the basis change.
  CHECK((basis.basis_change - tensor_product(basis.system_vectors, basis.env_vectors))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("commuting check rejects a non-commuting coupling") {
  HamiltonianSplit split;
  split.h_s0 = pauli_z();
  split.h_e0 = Matrix::Zero(2, 2);
  split.coupling.terms.push_back({pauli_x(), pauli_z()});  // [sigma_z, sigma_x] != 0
  split.h_tot1 = Matrix::Zero(4, 4);
  CHECK_THROWS_AS(build_sesr(split), SolvabilityError);
}

TEST_CASE("perturbation matrix of zero is zero") {
  HamiltonianSplit split;
  split.h_s0 = pauli_z();
  split.h_e0 = pauli_z();
  split.h_tot1 = Matrix::Zero(4, 4);
  const SesrBasis basis = build_sesr(split);
  const PerturbationData pert = perturbation_matrix(split.h_tot1, basis);
  CHECK(pert.h1_diag.cwiseAbs().maxCoeff() == 0.0);
  CHECK(pert.g1.cwiseAbs().maxCoeff() == 0.0);
  CHECK((pert.improved_energies - basis.energies).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("redivision is the identity when h1 has no diagonal") {
  std::mt19937_64 rng(43);
  HamiltonianSplit split;
  split.h_s0 = pauli_z();
  split.h_e0 = 2.0 * pauli_z();
  Matrix v = Matrix::Zero(4, 4);
  v(0, 3) = Complex(0.2, 0.1);
  v(3, 0) = std::conj(v(0, 3));
  split.h_tot1 = v;
  const SesrBasis basis = build_sesr(split);
  const PerturbationData pert = perturbation_matrix(split.h_tot1, basis);
  const RedivisionResult out = hamiltonian_redivision(split, basis, pert);
  CHECK((out.basis.energies - basis.energies).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.split.h_tot1 - split.h_tot1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.split.coupling.terms.size() == split.coupling.terms.size());
}

TEST_CASE("degenerate diagonalization is the identity without degeneracies") {
  HamiltonianSplit split;
  split.h_s0 = pauli_z();
  split.h_e0 = 3.0 * pauli_z();
  split.h_tot1 = Matrix::Zero(4, 4);
  const SesrBasis basis = build_sesr(split);
  PerturbationData pert = perturbation_matrix(split.h_tot1, basis);
  auto [basis2, pert2] =
      diagonalize_degenerate_subspaces(basis, pert, default_gap_tol(basis.energies));
  CHECK(basis2.product_form);
  CHECK((basis2.basis_change - basis.basis_change).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("case one leaves the basis unchanged: degenerate blocks vanish") {
  SpinBathSpec spec;
  spec.n_env = 2;
  spec.z = RealVector(2);
  spec.z << 0.4, 0.3;
  spec.x = RealVector(2);
  spec.x << 0.3, 0.1;
  spec.mu = 4.0;
  const CaseSesr cs = sesr_for_case(spec, SesrCase::one);
  auto [basis2, pert2] =
      diagonalize_degenerate_subspaces(cs.basis, cs.pert, default_gap_tol(cs.basis.energies));
  CHECK(basis2.product_form);
  CHECK((basis2.basis_change - cs.basis.basis_change).cwiseAbs().maxCoeff() == 0.0);
  const DegenerateReport report =
      check_degenerate_offdiagonals(cs.basis, cs.pert, default_gap_tol(cs.basis.energies));
  CHECK(report.ok);
}

TEST_CASE("synthetic degenerate block reproduces first-order splittings") {
  // dim_s = 3, trivial environment; two-fold degeneracy split by g1.
  HamiltonianSplit split;
  Matrix h_s0 = Matrix::Zero(3, 3);
  h_s0(0, 0) = 1.0;
  h_s0(1, 1) = 1.0;
  h_s0(2, 2) = 3.0;
  split.h_s0 = h_s0;
  split.h_e0 = Matrix::Zero(1, 1);
  Matrix v = Matrix::Zero(3, 3);
  v(0, 1) = Complex(0.3, 0.4);
  v(1, 0) = std::conj(v(0, 1));
  v(0, 2) = Complex(0.1, 0.0);
  v(2, 0) = 0.1;
  split.h_tot1 = v;

  const SesrBasis basis = build_sesr(split);
  PerturbationData pert = perturbation_matrix(split.h_tot1, basis);
  auto [basis2, pert2] =
      diagonalize_degenerate_subspaces(basis, pert, default_gap_tol(basis.energies));
  CHECK_FALSE(basis2.product_form);
  const DegenerateReport report =
      check_degenerate_offdiagonals(basis2, pert2, default_gap_tol(basis2.energies));
  CHECK(report.ok);

  // First-order splittings from brute force: eig(H0 + lambda V) - E ~ lambda * h1.
  std::vector<double> slopes(3);
  {
    RealVector first_order = basis2.energies + pert2.h1_diag;
    std::vector<std::pair<double, double>> order;  // (E, E + h1)
    for (Index i = 0; i < 3; ++i) order.emplace_back(first_order(i), 0.0);
    for (const double lambda : {1e-1, 1e-2}) {
      const Eigh brute = hermitian_eigendecomposition(
          split.h_tot0() + lambda * split.h_tot1);
      RealVector predicted = basis2.energies + lambda * pert2.h1_diag;
      std::vector<double> pred(predicted.begin(), predicted.end());
      std::sort(pred.begin(), pred.end());
      double err = 0.0;
      for (Index i = 0; i < 3; ++i) {
        err = std::max(err, std::abs(pred[i] - brute.eigenvalues(i)));
      }
      // Second-order remainder: err <= C lambda^2 with a modest constant.
      CHECK(err < 2.0 * lambda * lambda);
    }
  }
  (void)slopes;
}

TEST_CASE("offending degenerate pair is reported") {
  HamiltonianSplit split;
  Matrix h_s0 = Matrix::Zero(2, 2);  // fully degenerate system
  split.h_s0 = h_s0;
  split.h_e0 = Matrix::Zero(1, 1);
  Matrix v = Matrix::Zero(2, 2);
  v(0, 1) = 0.5;
  v(1, 0) = 0.5;
  split.h_tot1 = v;
  const SesrBasis basis = build_sesr(split);
  const PerturbationData pert = perturbation_matrix(split.h_tot1, basis);
  const DegenerateReport report =
      check_degenerate_offdiagonals(basis, pert, default_gap_tol(basis.energies));
  CHECK_FALSE(report.ok);
  REQUIRE(report.offending_pairs.size() == 1);
  CHECK(report.offending_pairs[0].first == 0);
  CHECK(report.offending_pairs[0].second == 1);
}

TEST_CASE("improved energies reduce to E + h1 when g1 vanishes") {
  PerturbationData pert;
  pert.h1_diag = RealVector(3);
  pert.h1_diag << 0.1, -0.2, 0.3;
  pert.g1 = Matrix::Zero(3, 3);
  RealVector e(3);
  e << 0.0, 1.0, 2.0;
  for (int order = 2; order <= 5; ++order) {
    const RealVector out = improved_energies(pert, e, order);
    CHECK((out - (e + pert.h1_diag)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("case-one improved energy at order 4: frozen values") {
  // mu = 2, single environment spin with X = 0.3, Z = 0.4 (Y = 0.5, f = 0.5).
  SpinBathSpec spec;
  spec.n_env = 1;
  spec.z = RealVector(1);
  spec.z << 0.4;
  spec.x = RealVector(1);
  spec.x << 0.3;
  spec.mu = 2.0;
  const CaseSesr cs = sesr_for_case(spec, SesrCase::one);
  const RealVector etil = improved_energies(cs.pert, cs.basis.energies, 4);
  CHECK(etil(0) == doctest::Approx(2.0615234375).epsilon(1e-12));
  // Exact eigenvalue sqrt(mu^2 + f^2) = 2.0615528...
  const double exact = std::sqrt(spec.mu * spec.mu + 0.25);
  CHECK(exact == doctest::Approx(2.0615528128).epsilon(1e-9));
  CHECK(std::abs(etil(0) - exact) < 5e-5);
  // Order 5 adds nothing for this model (all closed odd chains vanish).
  const RealVector etil5 = improved_energies(cs.pert, cs.basis.energies, 5);
  CHECK(std::abs(etil5(0) - etil(0)) < 1e-14);
}

TEST_CASE("order-2 improved energies match an independent double loop") {
  std::mt19937_64 rng(47);
  const Index n = 6;
  RealVector e(n);
  e << 0.0, 1.1, 2.3, 3.1, 4.7, 6.2;
  Matrix g = testing::random_hermitian(n, rng, 0.1);
  g.diagonal().setZero();
  PerturbationData pert;
  pert.h1_diag = RealVector::Zero(n);
  pert.g1 = g;
  const RealVector out = improved_energies(pert, e, 2);
  for (Index p = 0; p < n; ++p) {
    double rs2 = 0.0;
    for (Index r = 0; r < n; ++r) {
      if (r == p) continue;
      rs2 += (g(p, r) * g(r, p)).real() / (e(p) - e(r));
    }
    CHECK(out(p) - e(p) == doctest::Approx(rs2).epsilon(1e-12));
  }
}

TEST_CASE("improved energies error on degenerate denominators with coupling") {
  PerturbationData pert;
  pert.h1_diag = RealVector::Zero(2);
  pert.g1 = Matrix::Zero(2, 2);
  pert.g1(0, 1) = 0.5;
  pert.g1(1, 0) = 0.5;
  RealVector e(2);
  e << 1.0, 1.0;
  CHECK_THROWS_AS(improved_energies(pert, e, 2), DegeneracyError);
}

TEST_CASE("improved energies scale with the perturbation order") {
  std::mt19937_64 rng(53);
  const Index n = 5;
  RealVector e(n);
  e << 0.0, 1.3, 2.9, 4.2, 5.8;
  Matrix v = testing::random_hermitian(n, rng, 1.0);
  v.diagonal().setZero();

  for (int order = 2; order <= 5; ++order) {
    std::vector<double> errors;
    for (const double lambda : {1e-1, 1e-2}) {
      PerturbationData pert;
      pert.h1_diag = RealVector::Zero(n);
      pert.g1 = lambda * v;
      const RealVector etil = improved_energies(pert, e, order);
      const Eigh brute = hermitian_eigendecomposition(
          e.cast<Complex>().asDiagonal().toDenseMatrix() + lambda * v);
      // Levels stay order-aligned for these gaps and couplings.
      double err = 0.0;
      for (Index i = 0; i < n; ++i) err = std::max(err, std::abs(etil(i) - brute.eigenvalues(i)));
      errors.push_back(err);
    }
    CHECK(errors[0] / errors[1] >= std::pow(10.0, order));
  }
}

TEST_CASE("transformations preserve g1 hermiticity") {
  std::mt19937_64 rng(59);
  HamiltonianSplit split;
  Matrix h_s0 = Matrix::Zero(3, 3);
  h_s0(0, 0) = 1.0;
  h_s0(1, 1) = 1.0;
  h_s0(2, 2) = 2.0;
  split.h_s0 = h_s0;
  split.h_e0 = Matrix::Zero(2, 2);
  split.h_tot1 = testing::random_hermitian(6, rng, 0.2);
  const SesrBasis basis = build_sesr(split);
  PerturbationData pert = perturbation_matrix(split.h_tot1, basis);
  CHECK(hermiticity_defect(pert.g1) < 1e-14);
  const RedivisionResult redivided = hamiltonian_redivision(split, basis, pert);
  CHECK(hermiticity_defect(redivided.pert.g1) < 1e-14);
  auto [basis2, pert2] = diagonalize_degenerate_subspaces(
      redivided.basis, redivided.pert, default_gap_tol(redivided.basis.energies));
  CHECK(hermiticity_defect(pert2.g1) < 1e-14);
  CHECK(pert2.g1.diagonal().cwiseAbs().maxCoeff() == 0.0);

  // Operator-level reconstruction through redivision.
  CHECK((redivided.split.h_tot0() + redivided.split.h_tot1 - split.h_tot()).cwiseAbs().maxCoeff() <
        1e-12);
}

#include "doctest.h"

#include <random>

#include "oqdyn/linalg.hpp"
#include "test_rng.hpp"

using namespace oqdyn;

TEST_CASE("tensor product identities") {
  CHECK((tensor_product(identity(2), identity(2)) - identity(4)).norm() == 0.0);

  const Matrix zz = tensor_product(pauli_z(), pauli_z());
  Matrix expect = Matrix::Zero(4, 4);
  expect(0, 0) = 1;
  expect(1, 1) = -1;
  expect(2, 2) = -1;
  expect(3, 3) = 1;
  CHECK((zz - expect).norm() == 0.0);
}

TEST_CASE("tensor product acts factor-wise on product vectors") {
  std::mt19937_64 rng(11);
  const Matrix a = testing::random_matrix(2, rng);
  const Matrix b = testing::random_matrix(2, rng);
  const Vector x = testing::random_ket(2, rng);
  const Vector y = testing::random_ket(2, rng);

  Vector xy(4), axby(4);
  for (Index i = 0; i < 2; ++i) {
    for (Index k = 0; k < 2; ++k) {
      xy(i * 2 + k) = x(i) * y(k);
    }
  }
  const Vector ax = a * x;
  const Vector by = b * y;
  for (Index i = 0; i < 2; ++i) {
    for (Index k = 0; k < 2; ++k) {
      axby(i * 2 + k) = ax(i) * by(k);
    }
  }
  CHECK((tensor_product(a, b) * xy - axby).norm() < 1e-14);
}

TEST_CASE("tensor product dimension budget") {
  CHECK_THROWS_AS(tensor_product(identity(100), identity(100), 4096), BudgetError);
  CHECK_THROWS_AS(tensor_product(Matrix::Zero(2, 3), identity(2)), DimensionError);
}

TEST_CASE("tensor product associativity under the fixed flattening") {
  std::mt19937_64 rng(7);
  const Matrix a = testing::random_matrix(2, rng);
  const Matrix b = testing::random_matrix(3, rng);
  const Matrix c = testing::random_matrix(2, rng);
  const Matrix left = tensor_product(tensor_product(a, b), c);
  const Matrix right = tensor_product(a, tensor_product(b, c));
  CHECK((left - right).norm() < 1e-13);
}

TEST_CASE("partial trace of a product state returns the system factor") {
  std::mt19937_64 rng(3);
  const DensityMatrix rho_s = testing::random_density(3, rng);
  const DensityMatrix rho_e = testing::random_density(4, rng);
  const DensityMatrix rho = DensityMatrix(tensor_product(rho_s.op, rho_e.op));
  const DensityMatrix reduced = partial_trace_env(rho, 3, 4);
  CHECK((reduced.op - rho_s.op).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("partial trace of the Bell state is maximally mixed") {
  Matrix rho = Matrix::Zero(4, 4);
  // (|00> + |11>) / sqrt(2), flat indices 0 and 3.
  rho(0, 0) = rho(0, 3) = rho(3, 0) = rho(3, 3) = 0.5;
  const Matrix reduced = partial_trace_env(rho, 2, 2);
  CHECK((reduced - 0.5 * identity(2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("partial trace matches brute-force index summation") {
  std::mt19937_64 rng(17);
  const DensityMatrix rho = testing::random_density(4, rng);
  const Matrix reduced = partial_trace_env(rho.op, 2, 2);
  Matrix expect = Matrix::Zero(2, 2);
  for (Index g = 0; g < 2; ++g) {
    for (Index gp = 0; gp < 2; ++gp) {
      for (Index v = 0; v < 2; ++v) {
        expect(g, gp) += rho.op(g * 2 + v, gp * 2 + v);
      }
    }
  }
  CHECK((reduced - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(reduced.trace() - rho.op.trace()) < 1e-14);
}

TEST_CASE("partial trace rejects mismatched dimensions") {
  CHECK_THROWS_AS(partial_trace_env(Matrix::Zero(6, 6), 2, 2), DimensionError);
}

TEST_CASE("eigendecomposition of pauli matrices") {
  const Eigh z = hermitian_eigendecomposition(pauli_z());
  CHECK(z.eigenvalues(0) == doctest::Approx(-1.0));
  CHECK(z.eigenvalues(1) == doctest::Approx(1.0));

  const Eigh x = hermitian_eigendecomposition(pauli_x());
  CHECK(x.eigenvalues(0) == doctest::Approx(-1.0));
  CHECK(x.eigenvalues(1) == doctest::Approx(1.0));
  // Eigenvectors (|0> -+ |1>)/sqrt(2) up to the fixed phase convention.
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(x.eigenvectors(0, 0)) == doctest::Approx(inv_sqrt2));
  CHECK(std::abs(std::abs(x.eigenvectors(1, 0).real()) - inv_sqrt2) < 1e-12);
  CHECK((x.eigenvectors(1, 0) / x.eigenvectors(0, 0)).real() == doctest::Approx(-1.0));
  CHECK((x.eigenvectors(1, 1) / x.eigenvectors(0, 1)).real() == doctest::Approx(1.0));
}

TEST_CASE("eigendecomposition reconstruction on random hermitian input") {
  std::mt19937_64 rng(23);
  const Matrix h = testing::random_hermitian(8, rng);
  const Eigh eig = hermitian_eigendecomposition(h);
  const Matrix rebuilt = eig.eigenvectors * eig.eigenvalues.cast<Complex>().asDiagonal() *
                         eig.eigenvectors.adjoint();
  CHECK((rebuilt - h).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((eig.eigenvectors.adjoint() * eig.eigenvectors - identity(8)).cwiseAbs().maxCoeff() <
        1e-10);
  for (Index i = 1; i < 8; ++i) CHECK(eig.eigenvalues(i) >= eig.eigenvalues(i - 1));
}

TEST_CASE("eigendecomposition residual stays small at larger dimensions") {
  std::mt19937_64 rng(29);
  for (Index n : {16, 128}) {
    const Matrix h = testing::random_hermitian(n, rng);
    const Eigh eig = hermitian_eigendecomposition(h);
    const double residual =
        (h * eig.eigenvectors -
         eig.eigenvectors * eig.eigenvalues.cast<Complex>().asDiagonal())
            .norm();
    CHECK(residual / h.norm() < 1e-12);
  }
}

TEST_CASE("eigendecomposition rejects non-hermitian input") {
  Matrix m(2, 2);
  m << 0, 1, 0, 0;
  CHECK_THROWS_AS(hermitian_eigendecomposition(m), NumericsError);
}

TEST_CASE("degenerate tie-break is reproducible") {
  // A projector with a two-fold degenerate zero eigenvalue.
  Matrix h = Matrix::Zero(3, 3);
  h(2, 2) = 1.0;
  const Eigh a = hermitian_eigendecomposition(h);
  const Eigh b = hermitian_eigendecomposition(h);
  CHECK((a.eigenvectors - b.eigenvectors).cwiseAbs().maxCoeff() == 0.0);
  // Phase convention: the first significant component of each column is real
  // positive.
  for (Index c = 0; c < 3; ++c) {
    Index first = 0;
    while (std::abs(a.eigenvectors(first, c)) < 1e-9) ++first;
    CHECK(a.eigenvectors(first, c).imag() == doctest::Approx(0.0));
    CHECK(a.eigenvectors(first, c).real() > 0.0);
  }
}

TEST_CASE("trace distance examples") {
  std::mt19937_64 rng(31);
  const DensityMatrix rho = testing::random_density(3, rng);
  CHECK(trace_distance(rho, rho) == doctest::Approx(0.0));

  Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  CHECK(trace_distance(p0, p1) == doctest::Approx(1.0));
  CHECK(trace_distance(p0, 0.5 * identity(2)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(trace_distance(p0, identity(3)), DimensionError);
}

TEST_CASE("density matrix validation") {
  DensityMatrix good(0.5 * identity(2));
  CHECK_NOTHROW(good.validate());

  DensityMatrix bad_trace(identity(2));
  CHECK_THROWS_AS(bad_trace.validate(), ValidationError);

  Matrix nh(2, 2);
  nh << 0.5, 0.3, -0.3, 0.5;
  CHECK_THROWS_AS(DensityMatrix(nh).validate(), ValidationError);

  Matrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(DensityMatrix(neg).validate(), ValidationError);
}

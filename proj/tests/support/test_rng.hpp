// Test helpers: seeded random matrices and states.
#ifndef OQDYN_TESTS_SUPPORT_TEST_RNG_HPP
#define OQDYN_TESTS_SUPPORT_TEST_RNG_HPP

#include <random>

#include "oqdyn/linalg.hpp"
#include "oqdyn/types.hpp"

namespace oqdyn::testing {

inline Matrix random_matrix(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      m(i, j) = Complex(dist(rng), dist(rng));
    }
  }
  return m;
}

inline Matrix random_hermitian(Index n, std::mt19937_64& rng, double scale = 1.0) {
  const Matrix m = random_matrix(n, rng, scale);
  return hermitize(m);
}

// Ginibre construction: G G^dagger normalized to unit trace.
inline DensityMatrix random_density(Index n, std::mt19937_64& rng) {
  const Matrix g = random_matrix(n, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityMatrix(hermitize(rho));
}

inline Vector random_ket(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = Complex(dist(rng), dist(rng));
  v.normalize();
  return v;
}

}  // namespace oqdyn::testing

#endif  // OQDYN_TESTS_SUPPORT_TEST_RNG_HPP

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

#ifndef OQDYN_TYPES_HPP
#define OQDYN_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace oqdyn {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultTolerance = 1e-9;
inline constexpr Index kDefaultDimBudget = 4096;
inline constexpr std::int64_t kDefaultPathBudget = 200'000'000;

// Matrix elements smaller than this (relative to the matrix scale) are
// treated as structural zeros during path enumeration and perturbation sums.
inline constexpr double kStructuralZero = 1e-14;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

// H_SE0 does not satisfy the commuting structure required for a product
// eigenbasis, or the simultaneous diagonalization failed.
class SolvabilityError : public Error {
 public:
  using Error::Error;
};

// A degenerate energy denominator was reached with a nonzero numerator.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericsError : public Error {
 public:
  using Error::Error;
};

// Label pair (gamma, v) of a composite system x environment level.
// Flattening convention: flat = gamma * dim_e + v (system index slow), so a
// partial trace over the environment sums contiguous blocks.
struct CompositeIndex {
  Index gamma = 0;
  Index v = 0;

  static Index flat(Index gamma, Index v, Index dim_e) { return gamma * dim_e + v; }
  static CompositeIndex from_flat(Index flat, Index dim_e) {
    return CompositeIndex{flat / dim_e, flat % dim_e};
  }
};

struct DensityMatrix {
  Matrix op;
  double tolerance = kDefaultTolerance;

  DensityMatrix() = default;
  explicit DensityMatrix(Matrix m, double tol = kDefaultTolerance)
      : op(std::move(m)), tolerance(tol) {}

  Index dim() const { return op.rows(); }

  // Checks hermiticity, unit trace, and positive semidefiniteness within
  // `tolerance`. Throws ValidationError on the first violated invariant.
  void validate() const;
};

}  // namespace oqdyn

#endif  // OQDYN_TYPES_HPP

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

#ifndef OQDYN_DIVIDED_DIFFERENCE_HPP
#define OQDYN_DIVIDED_DIFFERENCE_HPP

#include <span>
#include <vector>

#include "oqdyn/types.hpp"

namespace oqdyn {

// Scalar functions of the form P(x) * exp(a*x + b*x^2) with a polynomial P.
// The family is closed under differentiation, which is what the confluent
// divided-difference table needs: repeated nodes contribute f^(m)(x) / m!.
struct PolyExpFunction {
  std::vector<Complex> poly;  // coefficients, ascending powers; {1} = pure exponential
  Complex a{0.0, 0.0};
  Complex b{0.0, 0.0};

  Complex value(double x) const;
  PolyExpFunction derivative() const;  // P <- P' + P * (a + 2 b x)

  static PolyExpFunction exp_minus_ixt(double t);
  static PolyExpFunction power(int K);  // x^K
  // x^k * exp(-i x t - theta0 x^2 t / 2), the Milburn time-evolution stamp.
  static PolyExpFunction power_times_g(int k, double t, double theta0);
};

// l-th divided difference of x -> exp(-i x t) over `nodes` (length l+1).
// Nodes within `confluence_tol` of each other are merged and handled by the
// confluent recursion; a negative tolerance selects 1e-8 * max|node|. Table
// entries spanning a near-degenerate cluster are evaluated by a Taylor
// expansion around the cluster mean, so small node perturbations never blow
// up. For one node this is exp(-i E t); for a repeated pair, -i t exp(-i E t).
Complex divided_difference_exp(std::span<const double> nodes, double t,
                               double confluence_tol = -1.0);

// Divided difference of an arbitrary PolyExpFunction over `nodes`.
Complex divided_difference(const PolyExpFunction& f, std::span<const double> nodes,
                           double confluence_tol = -1.0);

namespace detail {

// Sorts (node, value) pairs by node and merges nodes closer than tol,
// rewriting merged nodes (and their values) to the cluster representative.
// `values` may be empty.
void sort_and_merge_nodes(std::span<double> nodes, std::span<Complex> values, double tol);

double auto_confluence_tol(std::span<const double> nodes);

// Window span below which table entries switch to the cluster-stable Taylor
// evaluation. `rate` is the local variation scale of the function (|t| for
// the exponential stamp).
double cluster_radius(std::span<const double> nodes, double rate);

// Reusable confluent/cluster-stable Newton table. Nodes must be sorted
// ascending with merged duplicates bitwise equal.
class DividedDifferenceTable {
 public:
  void resize(int max_nodes);

  // Pure exponential f(x) = exp(-i x t); values[i] must equal the phase at
  // nodes[i].
  Complex evaluate_exp(std::span<const double> nodes, std::span<const Complex> values,
                       double t, double radius);

  // General P(x) exp(a x + b x^2).
  Complex evaluate(std::span<const double> nodes, const PolyExpFunction& f, double radius);

 private:
  std::vector<Complex> tab_;
  std::vector<Complex> h_;  // complete homogeneous symmetric polynomial workspace
};

}  // namespace detail

}  // namespace oqdyn

#endif  // OQDYN_DIVIDED_DIFFERENCE_HPP

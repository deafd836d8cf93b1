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

#ifndef OQDYN_MILBURN_HPP
#define OQDYN_MILBURN_HPP

#include <span>

#include "oqdyn/linalg.hpp"
#include "oqdyn/propagator.hpp"
#include "oqdyn/types.hpp"

namespace oqdyn {

struct MilburnParams {
  double theta0 = 0.0;  // minimum unitary-phase step; 0 recovers von Neumann dynamics
  double kraus_cutoff_tol = 1e-12;
};

// -i[H, rho] - (theta0/2) [H, [H, rho]].
Matrix milburn_rhs(const DensityMatrix& rho, const Matrix& h, const MilburnParams& params);

// M_k = sqrt((theta0 t)^k / k!) H^k exp(-i H t - theta0 H^2 t / 2), assembled
// in the eigenbasis of H.
Matrix kraus_operator(int k, double t, const Eigh& h_eig, const MilburnParams& params);

// Smallest K with (theta0 t lambda_max^2)^{K+1} / (K+1)! below the cutoff.
int kraus_kmax_for_tolerance(double theta0, double t, double lambda_max, double tol);

// Completeness defect max_a |1 - sum_{k<=K} poisson(k; theta0 t lambda_a^2)|.
double kraus_completeness_defect(int k_max, double theta0, double t, const RealVector& evals);

// Eigenbasis dephasing stamp rho_ab -> rho_ab g(E_a - E_b; t) with
// g(x; t) = exp(-i x t - theta0 x^2 t / 2).
DensityMatrix milburn_evolve_closed_form(const DensityMatrix& rho0, double t, const Matrix& h,
                                         const MilburnParams& params);
DensityMatrix milburn_evolve_closed_form(const DensityMatrix& rho0, double t,
                                         const Eigh& h_eig, const MilburnParams& params);

// sum_{k<=K} M_k rho M_k^dagger; K < 0 selects the Poisson bound. Throws when
// the completeness defect at K exceeds the cutoff tolerance.
DensityMatrix milburn_evolve_kraus(const DensityMatrix& rho0, double t, const Matrix& h,
                                   const MilburnParams& params, int k_max = -1);

// C^K_l(E[gamma v, l]): the l-th divided difference of x -> x^K over the path
// energies (the operator-binomial expansion coefficients).
Complex binomial_coefficient_CKl(int K, std::span<const double> nodes,
                                 double confluence_tol = -1.0);

// Perturbative Milburn solution in the SESR: M_k built from the zeroth
// diagonal stamp plus path sums of divided differences of x -> x^k g(x; t),
// assembled as rho_S(t) = sum_k Tr_E[M_k rho0 M_k^dagger].
DensityMatrix milburn_perturbative_reduced(const DensityMatrix& rho0_tot, double t,
                                           const SesrBasis& basis, const Matrix& h1_full,
                                           const MilburnParams& params, int k_max, int l_max,
                                           const SeriesConfig& series_cfg = {});

}  // namespace oqdyn

#endif  // OQDYN_MILBURN_HPP

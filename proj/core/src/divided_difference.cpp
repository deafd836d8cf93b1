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

#include "oqdyn/divided_difference.hpp"

#include <algorithm>
#include <cmath>

namespace oqdyn {

Complex PolyExpFunction::value(double x) const {
  Complex p(0.0, 0.0);
  for (auto it = poly.rbegin(); it != poly.rend(); ++it) {
    p = p * x + *it;
  }
  return p * std::exp(a * x + b * x * x);
}

PolyExpFunction PolyExpFunction::derivative() const {
  PolyExpFunction d;
  d.a = a;
  d.b = b;
  const bool quadratic = (b != Complex(0.0, 0.0));
  d.poly.assign(poly.size() + (quadratic ? 1 : 0), Complex(0.0, 0.0));
  for (std::size_t k = 1; k < poly.size(); ++k) {
    d.poly[k - 1] += static_cast<double>(k) * poly[k];
  }
  for (std::size_t k = 0; k < poly.size(); ++k) {
    d.poly[k] += a * poly[k];
    if (quadratic) d.poly[k + 1] += 2.0 * b * poly[k];
  }
  while (d.poly.size() > 1 && d.poly.back() == Complex(0.0, 0.0)) d.poly.pop_back();
  return d;
}

PolyExpFunction PolyExpFunction::exp_minus_ixt(double t) {
  PolyExpFunction f;
  f.poly = {Complex(1.0, 0.0)};
  f.a = Complex(0.0, -t);
  return f;
}

PolyExpFunction PolyExpFunction::power(int K) {
  PolyExpFunction f;
  f.poly.assign(static_cast<std::size_t>(K) + 1, Complex(0.0, 0.0));
  f.poly.back() = Complex(1.0, 0.0);
  return f;
}

PolyExpFunction PolyExpFunction::power_times_g(int k, double t, double theta0) {
  PolyExpFunction f = power(k);
  f.a = Complex(0.0, -t);
  f.b = Complex(-0.5 * theta0 * t, 0.0);
  return f;
}

namespace detail {

double auto_confluence_tol(std::span<const double> nodes) {
  double scale = 0.0;
  for (double x : nodes) scale = std::max(scale, std::abs(x));
  return 1e-8 * scale;
}

double cluster_radius(std::span<const double> nodes, double rate) {
  double scale = 0.0;
  for (double x : nodes) scale = std::max(scale, std::abs(x));
  // Quotient entries stay accurate above the radius; the Taylor series for
  // entries below it needs rate * radius small for fast convergence.
  return std::min(1e-3 * std::max(1.0, scale), 0.05 / std::max(rate, 1.0));
}

void sort_and_merge_nodes(std::span<double> nodes, std::span<Complex> values, double tol) {
  const std::size_t n = nodes.size();
  // Insertion sort on parallel arrays; node counts are small.
  for (std::size_t i = 1; i < n; ++i) {
    const double x = nodes[i];
    const Complex v = values.empty() ? Complex() : values[i];
    std::size_t j = i;
    while (j > 0 && nodes[j - 1] > x) {
      nodes[j] = nodes[j - 1];
      if (!values.empty()) values[j] = values[j - 1];
      --j;
    }
    nodes[j] = x;
    if (!values.empty()) values[j] = v;
  }
  // Merge toward the cluster representative (first node of each cluster).
  std::size_t rep = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (nodes[i] - nodes[rep] <= tol) {
      nodes[i] = nodes[rep];
      if (!values.empty()) values[i] = values[rep];
    } else {
      rep = i;
    }
  }
}

void DividedDifferenceTable::resize(int max_nodes) {
  tab_.resize(static_cast<std::size_t>(std::max(max_nodes, 1)));
}

namespace {

constexpr int kTaylorMaxTerms = 64;

// Complete homogeneous symmetric polynomials h_0..h_max of the window offsets,
// via h_k(d_1..d_j) = h_k(d_1..d_{j-1}) + d_j h_{k-1}(d_1..d_j).
void homogeneous_sums(std::span<const double> offsets, std::vector<Complex>& h, int k_max) {
  h.assign(k_max + 1, Complex(0.0, 0.0));
  h[0] = Complex(1.0, 0.0);
  for (const double d : offsets) {
    for (int k = 1; k <= k_max; ++k) {
      h[k] += d * h[k - 1];
    }
  }
}

}  // namespace

Complex DividedDifferenceTable::evaluate_exp(std::span<const double> nodes,
                                             std::span<const Complex> values, double t,
                                             double radius) {
  const int n = static_cast<int>(nodes.size());
  if (tab_.size() < static_cast<std::size_t>(n)) tab_.resize(n);
  for (int i = 0; i < n; ++i) tab_[i] = values[i];
  const Complex mit(0.0, -t);

  std::vector<double> offsets;
  for (int w = 1; w < n; ++w) {
    // Scaled derivative stamp (-i t)^w / w! for exact-confluent entries.
    Complex df(1.0, 0.0);
    for (int j = 1; j <= w; ++j) df *= mit / static_cast<double>(j);
    for (int i = n - 1; i >= w; --i) {
      const double span = nodes[i] - nodes[i - w];
      if (span == 0.0) {
        tab_[i] = values[i] * df;
      } else if (span <= radius) {
        // Cluster-stable Taylor evaluation around the window mean.
        double mean = 0.0;
        for (int j = i - w; j <= i; ++j) mean += nodes[j];
        mean /= (w + 1);
        offsets.resize(w + 1);
        for (int j = 0; j <= w; ++j) offsets[j] = nodes[i - w + j] - mean;
        homogeneous_sums(offsets, h_, kTaylorMaxTerms);
        // c_m = (-i t)^m / m! e^{-i mean t}, starting at m = w.
        Complex c = df * std::exp(mit * mean);
        Complex acc(0.0, 0.0);
        for (int k = 0; k <= kTaylorMaxTerms; ++k) {
          const Complex term = c * h_[k];
          acc += term;
          if (std::abs(term) <= 1e-18 * (std::abs(acc) + 1e-30) && k > 2) break;
          c *= mit / static_cast<double>(w + k + 1);
        }
        tab_[i] = acc;
      } else {
        tab_[i] = (tab_[i] - tab_[i - 1]) / Complex(span, 0.0);
      }
    }
  }
  return tab_[n - 1];
}

Complex DividedDifferenceTable::evaluate(std::span<const double> nodes,
                                         const PolyExpFunction& f, double radius) {
  const int n = static_cast<int>(nodes.size());
  if (tab_.size() < static_cast<std::size_t>(n)) tab_.resize(n);

  // Lazy chain of scaled derivatives f^(m)(x) / m!.
  std::vector<PolyExpFunction> derivs{f};
  std::vector<double> inv_factorial{1.0};
  auto scaled_deriv = [&](int m, double x) -> Complex {
    while (static_cast<int>(derivs.size()) <= m) {
      derivs.push_back(derivs.back().derivative());
      inv_factorial.push_back(inv_factorial.back() /
                              static_cast<double>(derivs.size() - 1));
    }
    return derivs[m].value(x) * inv_factorial[m];
  };

  for (int i = 0; i < n; ++i) tab_[i] = f.value(nodes[i]);
  std::vector<double> offsets;
  for (int w = 1; w < n; ++w) {
    for (int i = n - 1; i >= w; --i) {
      const double span = nodes[i] - nodes[i - w];
      if (span == 0.0) {
        tab_[i] = scaled_deriv(w, nodes[i]);
      } else if (span <= radius) {
        double mean = 0.0;
        for (int j = i - w; j <= i; ++j) mean += nodes[j];
        mean /= (w + 1);
        offsets.resize(w + 1);
        for (int j = 0; j <= w; ++j) offsets[j] = nodes[i - w + j] - mean;
        homogeneous_sums(offsets, h_, kTaylorMaxTerms);
        Complex acc(0.0, 0.0);
        for (int k = 0; k <= kTaylorMaxTerms; ++k) {
          const Complex term = scaled_deriv(w + k, mean) * h_[k];
          acc += term;
          if (std::abs(term) <= 1e-18 * (std::abs(acc) + 1e-30) && k > 2) break;
        }
        tab_[i] = acc;
      } else {
        tab_[i] = (tab_[i] - tab_[i - 1]) / Complex(span, 0.0);
      }
    }
  }
  return tab_[n - 1];
}

}  // namespace detail

Complex divided_difference_exp(std::span<const double> nodes, double t,
                               double confluence_tol) {
  const std::size_t n = nodes.size();
  if (n == 0) throw DimensionError("divided_difference_exp: empty node list");
  if (!std::isfinite(t)) throw NumericsError("divided_difference_exp: non-finite t");
  if (confluence_tol < 0.0) confluence_tol = detail::auto_confluence_tol(nodes);

  std::vector<double> x(nodes.begin(), nodes.end());
  detail::sort_and_merge_nodes(x, {}, confluence_tol);

  std::vector<Complex> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = std::exp(Complex(0.0, -x[i] * t));
  }
  detail::DividedDifferenceTable table;
  return table.evaluate_exp(x, values, t, detail::cluster_radius(x, std::abs(t)));
}

Complex divided_difference(const PolyExpFunction& f, std::span<const double> nodes,
                           double confluence_tol) {
  const std::size_t n = nodes.size();
  if (n == 0) throw DimensionError("divided_difference: empty node list");
  if (confluence_tol < 0.0) confluence_tol = detail::auto_confluence_tol(nodes);

  std::vector<double> x(nodes.begin(), nodes.end());
  detail::sort_and_merge_nodes(x, {}, confluence_tol);

  double scale = 0.0;
  for (double xi : x) scale = std::max(scale, std::abs(xi));
  const double rate = std::abs(f.a) + 2.0 * std::abs(f.b) * scale +
                      static_cast<double>(f.poly.size()) / std::max(1.0, scale);
  detail::DividedDifferenceTable table;
  return table.evaluate(x, f, detail::cluster_radius(x, rate));
}

}  // namespace oqdyn

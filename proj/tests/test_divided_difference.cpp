#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oqdyn/divided_difference.hpp"

using namespace oqdyn;

namespace {

// Direct evaluation sum_i f(x_i) / prod_{j != i} (x_i - x_j), valid for
// distinct nodes. This is the bracket-with-d_i form, kept independent of the
// table recursion under test.
Complex direct_exp_dd(const std::vector<double>& nodes, double t) {
  Complex acc(0.0, 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double denom = 1.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (j != i) denom *= nodes[i] - nodes[j];
    }
    acc += std::exp(Complex(0.0, -nodes[i] * t)) / denom;
  }
  return acc;
}

}  // namespace

TEST_CASE("order zero is the phase itself") {
  const double nodes[] = {0.7};
  CHECK(std::abs(divided_difference_exp(nodes, 2.5) -
                 std::exp(Complex(0.0, -0.7 * 2.5))) < 1e-15);
}

TEST_CASE("repeated pair gives the derivative stamp") {
  const double e = 1.3, t = 0.9;
  const double nodes[] = {e, e};
  const Complex expect = Complex(0.0, -t) * std::exp(Complex(0.0, -e * t));
  CHECK(std::abs(divided_difference_exp(nodes, t) - expect) < 1e-15);

  // Limit check against an epsilon-perturbed distinct pair.
  const std::vector<double> near{e, e + 1e-6};
  CHECK(std::abs(direct_exp_dd(near, t) - expect) < 1e-5);
}

TEST_CASE("two symmetric nodes at t = pi/2") {
  const double nodes[] = {1.0, -1.0};
  const Complex got = divided_difference_exp(nodes, M_PI / 2.0);
  CHECK(std::abs(got - Complex(0.0, -1.0)) < 1e-15);
}

TEST_CASE("matches the direct d_i formula on distinct nodes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    std::vector<double> nodes(n);
    bool ok = true;
    for (auto& x : nodes) x = dist(rng);
    std::vector<double> sorted = nodes;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 1; i < n; ++i) {
      if (sorted[i] - sorted[i - 1] < 1e-2) ok = false;
    }
    if (!ok) continue;
    const double t = dist(rng);
    const Complex got = divided_difference_exp(nodes, t);
    const Complex expect = direct_exp_dd(nodes, t);
    CHECK(std::abs(got - expect) < 1e-10);
  }
}

TEST_CASE("permutation invariance") {
  std::mt19937_64 rng(9);
  std::vector<double> nodes{0.3, -1.2, 0.3, 2.0, 0.9};
  const double t = 1.7;
  const Complex ref = divided_difference_exp(nodes, t);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(nodes.begin(), nodes.end(), rng);
    CHECK(std::abs(divided_difference_exp(nodes, t) - ref) < 1e-10);
  }
}

TEST_CASE("continuity near confluent configurations") {
  // Perturbing one node by eps changes the value by O(eps * |t|^{l+1} / l!),
  // with no blow-up at the degeneracy.
  const double t = 1.9;
  for (int l : {1, 2, 3, 4}) {
    std::vector<double> nodes(l + 1, 0.8);
    const Complex base = divided_difference_exp(nodes, t);
    nodes.back() = 0.8 + 1e-6;
    const Complex moved = divided_difference_exp(nodes, t);
    double fact = 1.0;
    for (int j = 2; j <= l; ++j) fact *= j;
    CHECK(std::abs(moved - base) < 1e-4 * std::pow(std::abs(t), l + 1) / fact);
  }
}

TEST_CASE("fully confluent value is the Taylor stamp") {
  const double e = -0.4, t = 2.2;
  for (int l : {2, 3, 5}) {
    std::vector<double> nodes(l + 1, e);
    double fact = 1.0;
    for (int j = 2; j <= l; ++j) fact *= j;
    const Complex expect =
        std::pow(Complex(0.0, -t), l) / fact * std::exp(Complex(0.0, -e * t));
    CHECK(std::abs(divided_difference_exp(nodes, t) - expect) < 1e-12);
  }
}

TEST_CASE("general poly-exp engine agrees with the exp specialization") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  const PolyExpFunction f = PolyExpFunction::exp_minus_ixt(1.1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> nodes(3);
    for (auto& x : nodes) x = dist(rng);
    const Complex a = divided_difference(f, nodes);
    const Complex b = divided_difference_exp(nodes, 1.1);
    CHECK(std::abs(a - b) < 1e-12);
  }
}

TEST_CASE("poly-exp derivative closure") {
  // d/dx [x^2 exp(a x + b x^2)] = (2x + x^2 (a + 2 b x)) exp(...).
  PolyExpFunction f = PolyExpFunction::power(2);
  f.a = Complex(0.5, -0.3);
  f.b = Complex(-0.2, 0.1);
  const PolyExpFunction d = f.derivative();
  const double x = 0.7;
  const Complex expect =
      (2.0 * x + x * x * (f.a + 2.0 * f.b * x)) * std::exp(f.a * x + f.b * x * x);
  CHECK(std::abs(d.value(x) - expect) < 1e-14);
}

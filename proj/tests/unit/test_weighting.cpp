// Copyright 2026 The Dysolve Authors
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


#include <algorithm>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "dysolve/weighting.hpp"

using namespace dysolve;

namespace {

struct Frozen {
  std::vector<Complex> nodes;
  Complex value;
};

// i^n times the divided difference of exp(-ix), evaluated at 80 digits with
// mpmath (repeated nodes split by 1e-30).
const std::vector<Frozen>& frozen() {
  static const std::vector<Frozen> cases = {
      {{0.3}, {0.95533648912560602292, -0.2955202066613395645}},
      {{0.1, 0.7}, {0.90730711765143817868, -0.38360329665589554974}},
      {{1.0, 2.0, 3.0}, {-0.19130174118098951706, -0.41800193039179983102}},
      {{0.5, 0.5, 0.5}, {0.43879128094518635806, -0.23971276930210150014}},
      {{0.0, 1e-8, 2e-8, 3.0}, {0.10588444353810861369, -0.092963241796282574424}},
      {{0.1, -0.4, 2.5, 7.0, 7.0}, {-0.016007576453953207029, 0.00056059380864870427904}},
      {{Complex(-2, 0.5), Complex(1, -0.25), 0.75}, {0.42038192204545731444, 0.069193033056651523101}},
      {{40.0, -35.5, 12.25, 0.0, 1e-8}, {-5.9714986948463042528e-7, -0.00005945278061606663889}},
  };
  return cases;
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("weight matches frozen high-precision values") {
  for (const auto& c : frozen()) {
    CAPTURE(c.nodes.size());
    CHECK(rel(weight(c.nodes), c.value) < 1e-12);
    CHECK(rel(divided_difference_reference(c.nodes), c.value) < 1e-14);
  }
}

TEST_CASE("order zero is the plain exponential") {
  for (double x : {0.0, 1e-9, 0.4, -3.0, 25.0}) {
    const std::vector<double> n{x};
    CHECK(std::abs(weight(n) - std::polar(1.0, -x)) < 1e-15);
  }
}

TEST_CASE("fully confluent nodes give exp(-ix)/n!") {
  const double x = 1.3;
  double fact = 1.0;
  for (std::size_t n = 0; n <= 4; ++n) {
    if (n > 0) fact *= static_cast<double>(n);
    const std::vector<double> nodes(n + 1, x);
    CHECK(rel(weight(nodes), std::polar(1.0 / fact, -x)) < 1e-13);
  }
}

TEST_CASE("weight is symmetric in its nodes") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = u(rng);
    const Complex base = weight(x);
    std::sort(x.begin(), x.end());
    do {
      CHECK(rel(weight(x), base) < 1e-12);
    } while (std::next_permutation(x.begin(), x.end()) && trial < 3);
  }
}

TEST_CASE("uniform shift multiplies by a phase") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Complex> x(1 + trial % 5);
    for (auto& v : x) v = Complex(u(rng), 0.2 * u(rng));
    const auto [lhs, rhs] = weight_shift_check(x, Complex(u(rng), 0.1 * u(rng)));
    CHECK(rel(lhs, rhs) < 1e-11);
  }
}

TEST_CASE("node derivative matches finite differences") {
  const std::vector<Complex> x{0.2, -1.1, 2.4, 0.9};
  const double h = 1e-6;
  for (std::size_t j = 0; j < x.size(); ++j) {
    auto xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Complex fd = (weight(xp) - weight(xm)) / (2.0 * h);
    CHECK(rel(weight_derivative(x, j), fd) < 1e-7);
  }
}

TEST_CASE("modulus bounded by the simplex volume") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const double vol[] = {1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + trial % 5);
    for (auto& v : x) v = u(rng);
    CHECK(std::abs(weight(x)) <= vol[x.size() - 1] * (1.0 + 1e-12));
  }
}

TEST_CASE("empty nodes throw") {
  const std::vector<double> none;
  try {
    weight(none);
    FAIL("expected EmptyNodes");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyNodes);
  }
}

TEST_CASE("closed-form small cases") {
  const double pi = std::numbers::pi;
  const std::vector<double> a{pi}, b{0.0, pi}, c{0.0, 0.0}, d{0.0};
  CHECK(std::abs(weight(a) + 1.0) < 1e-15);
  CHECK(std::abs(weight(b) - Complex(0.0, -2.0 / pi)) < 1e-15);
  CHECK(std::abs(weight(c) - 1.0) < 1e-15);
  const std::vector<Complex> bc{0.0, pi}, dc{0.0}, ac{pi};
  CHECK(std::abs(divided_difference_reference(bc) - Complex(0.0, -2.0 / pi)) < 1e-15);
  CHECK(std::abs(divided_difference_reference(dc) - 1.0) < 1e-15);
  CHECK(std::abs(weight_derivative(dc, 0) - Complex(0.0, -1.0)) < 1e-15);
  CHECK(std::abs(weight_derivative(ac, 0) - Complex(0.0, 1.0)) < 1e-15);
  const auto [lhs, rhs] = weight_shift_check(dc, Complex(pi, 0.0));
  CHECK(std::abs(lhs + 1.0) < 1e-15);
  CHECK(std::abs(rhs + 1.0) < 1e-15);
}

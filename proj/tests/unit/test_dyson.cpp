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
#include <random>

#include "doctest.h"
#include "dysolve/dyson.hpp"
#include "dysolve/oracle.hpp"
#include "dysolve/weighting.hpp"
#include "../support.hpp"

using namespace dysolve;

namespace {

FrequencyAssignment fa(std::vector<std::uint32_t> ch, std::vector<int> s) { return {std::move(ch), std::move(s)}; }

double rel_dist(const Matrix& a, const Matrix& b) { return frobenius_distance(a, b) / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_CASE("entry counts") {
  CHECK(expected_entry_count(4, 1) == 31);
  CHECK(expected_entry_count(2, 1) == 7);
  CHECK(expected_entry_count(2, 3) == 43);
  CHECK(expected_slope_entry_count(2, 1) == 10);
  for (std::size_t q = 1; q <= 3; ++q) {
    for (std::size_t n = 0; n <= 4; ++n) {
      const auto all = enumerate_assignments(n, q);
      CHECK(all.size() == expected_entry_count(n, q));
      CHECK(std::is_sorted(all.begin(), all.end()));
      CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    }
  }
}

TEST_CASE("cumulative vector and plus count") {
  const std::vector<double> carriers{2.0, 3.5};
  CHECK(cumulative_vector(fa({}, {}), carriers) == std::vector<double>{0.0});
  CHECK(cumulative_vector(fa({0}, {1}), carriers) == std::vector<double>{2.0, 0.0});
  CHECK(cumulative_vector(fa({0, 1}, {1, -1}), carriers) == std::vector<double>{2.0 - 3.5, -3.5, 0.0});
  CHECK(signed_frequencies(fa({0, 1}, {1, -1}), carriers) == std::vector<double>{2.0, -3.5});
  CHECK(plus_count(fa({0, 0}, {1, 1})) == 2);
  CHECK(plus_count(fa({0, 0}, {-1, -1})) == 0);
  CHECK(plus_count(fa({0, 0, 0}, {1, -1, 1})) == 2);
  CHECK(plus_exponents(fa({0, 0, 0}, {1, -1, 1})) == std::vector<int>{1, 0, 1});
}

TEST_CASE("order zero operator is the drift step") {
  std::mt19937_64 rng(1);
  const SystemModel m = testing::random_system(rng, 4, 1);
  CHECK(frobenius_distance(build_dyson_operator(m, fa({}, {}), 0.05), drift_propagator(m, 0.05)) < 1e-15);
}

TEST_CASE("first order on a qubit matches the perturbation integral") {
  const double delta = ghz_to_angular(5.0), omega = ghz_to_angular(4.8), dt = 0.07;
  SystemModel m = testing::qubit(5.0);
  m.channels[0].carrier = omega;
  const Matrix s = build_dyson_operator(m, fa({0}, {-1}), dt);
  // (-i/2) int_0^dt e^{-i delta (dt - t)} e^{-i omega t} dt
  const Complex k(0.0, delta - omega);
  const Complex expect = Complex(0.0, -0.5) * std::polar(1.0, -delta * dt) * (std::exp(k * dt) - 1.0) / k;
  CHECK(std::abs(s(1, 0) - expect) < 1e-14);
  CHECK(std::abs(s(0, 0)) == 0.0);
}

TEST_CASE("constant identity drive at zero frequency") {
  SystemModel m;
  m.eigenvalues = {0.0, 0.0};
  m.channels.push_back({Matrix::Identity(2, 2), 0.0});
  const double dt = 0.3;
  const Matrix sum = build_dyson_operator(m, fa({0}, {1}), dt) + build_dyson_operator(m, fa({0}, {-1}), dt);
  CHECK(frobenius_distance(sum, Complex(0.0, -dt) * Matrix::Identity(2, 2)) < 1e-15);
  const Matrix q = simplex_path_operator(m, fa({0}, {1}), dt) + simplex_path_operator(m, fa({0}, {-1}), dt);
  CHECK(frobenius_distance(q, sum) < 1e-12);
}

TEST_CASE("operators agree with nested quadrature up to second order") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 3; ++trial) {
    const SystemModel m = testing::random_system(rng, 3, 2, 2.0);
    const double dt = 0.08;
    for (const auto& a : enumerate_assignments(2, 2)) {
      if (a.order() == 0) continue;
      CHECK(rel_dist(build_dyson_operator(m, a, dt), simplex_path_operator(m, a, dt)) < 1e-9);
      for (std::size_t p = 0; p < a.order(); ++p) {
        CHECK(rel_dist(build_slope_operator(m, a, p, dt), simplex_path_operator(m, a, dt, p)) < 1e-9);
      }
    }
  }
}

TEST_CASE("block exponential preparation matches the chain sum") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2; ++trial) {
    const SystemModel m = testing::random_system(rng, 4, 2, 1.5);
    const auto a = prepare(m, 4, 0.1, {.method = PrepareMethod::ChainSum});
    const auto b = prepare(m, 4, 0.1, {.method = PrepareMethod::BlockExponential});
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(a.entries[i].assignment == b.entries[i].assignment);
      CHECK(frobenius_distance(a.entries[i].op, b.entries[i].op) <= 1e-12 * std::max(1.0, a.entries[i].op.norm()));
    }
  }
}

TEST_CASE("prepare produces canonical entries and slopes") {
  std::mt19937_64 rng(4);
  const SystemModel m = testing::random_system(rng, 3, 1);
  const auto c = prepare(m, 2, 0.05, {.with_slopes = true});
  CHECK(c.entries.size() == 7);
  CHECK(c.slope_entries.size() == 10);
  CHECK(c.truncation_order == 2);
  CHECK(c.dim == 3);
  CHECK(c.system_fingerprint == fingerprint(m));
  for (std::size_t i = 0; i + 1 < c.entries.size(); ++i) CHECK(c.entries[i].assignment < c.entries[i + 1].assignment);
  for (const auto& e : c.entries) CHECK(rel_dist(e.op, build_dyson_operator(m, e.assignment, 0.05)) < 1e-14);
  CHECK_NOTHROW(check_fingerprint(c, m));
  SystemModel other = m;
  other.eigenvalues[2] += 1e-9;
  try {
    check_fingerprint(c, other);
    FAIL("expected FingerprintMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FingerprintMismatch);
  }
}

TEST_CASE("prepare rejects unsupported orders and bad widths") {
  std::mt19937_64 rng(5);
  const SystemModel m = testing::random_system(rng, 2, 1);
  try {
    prepare(m, 5, 0.1);
    FAIL("expected UnsupportedOrder");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedOrder);
  }
  CHECK_THROWS_AS(prepare(m, 2, 0.0), Error);
  CHECK_THROWS_AS(prepare(m, 2, -1.0), Error);
}

TEST_CASE("prepare is independent of the thread count") {
  std::mt19937_64 rng(6);
  const SystemModel m = testing::random_system(rng, 4, 2);
  const auto a = prepare(m, 3, 0.1, {.with_slopes = true, .threads = 1});
  const auto b = prepare(m, 3, 0.1, {.with_slopes = true, .threads = 3});
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) CHECK(a.entries[i].op == b.entries[i].op);
  for (std::size_t i = 0; i < a.slope_entries.size(); ++i) CHECK(a.slope_entries[i].op == b.slope_entries[i].op);
}

TEST_CASE("dyson operators scale as the truncation bound") {
  std::mt19937_64 rng(7);
  const SystemModel m = testing::random_system(rng, 3, 1);
  const double norm_x = m.channels[0].dipole.norm();
  for (double dt : {0.01, 0.1}) {
    const auto c = prepare(m, 3, dt);
    for (const auto& e : c.entries) {
      const double m_order = static_cast<double>(e.assignment.order());
      double fact = 1.0;
      for (int k = 2; k <= static_cast<int>(m_order); ++k) fact *= k;
      CHECK(e.op.norm() <= std::sqrt(3.0) * std::pow(0.5 * dt * norm_x, m_order) / fact * (1.0 + 1e-9) + 1e-300);
    }
  }
}

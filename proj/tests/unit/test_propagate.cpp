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


#include <random>

#include "doctest.h"
#include "dysolve/oracle.hpp"
#include "dysolve/propagate.hpp"
#include "../support.hpp"

using namespace dysolve;

namespace {

SubpixelSequence constant_sequence(std::size_t p, double dt, Complex v) {
  SubpixelSequence s;
  s.subpixel_width = dt;
  s.values.assign(p, v);
  return s;
}

SubpixelSequence random_sequence(std::mt19937_64& rng, std::size_t p, double dt, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  SubpixelSequence s;
  s.subpixel_width = dt;
  for (std::size_t l = 0; l < p; ++l) s.values.emplace_back(nd(rng), nd(rng));
  return s;
}

Matrix random_unitary(std::mt19937_64& rng, std::size_t n) {
  const Matrix h = testing::random_hermitian(rng, n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Eigen::VectorXcd ph(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, es.eigenvalues()(k));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TEST_CASE("coefficient examples") {
  const std::vector<double> carriers{ghz_to_angular(5.0)};
  std::vector<SubpixelSequence> seqs{constant_sequence(3, 0.1, Complex(0.0, 0.1))};
  CHECK(coefficient(2, {}, seqs, carriers) == Complex(1.0));
  CHECK(std::abs(coefficient(0, {{0}, {1}}, seqs, carriers) - Complex(0.0, 0.1)) < 1e-16);
  const Complex a(0.3, -0.2);
  seqs[0] = constant_sequence(3, 0.1, a);
  CHECK(std::abs(coefficient(2, {{0, 0}, {1, -1}}, seqs, carriers) - std::norm(a)) < 1e-15);
  // Phase exp(i w l dt) for a single + insertion.
  CHECK(std::abs(coefficient(2, {{0}, {1}}, seqs, carriers) - a * std::polar(1.0, carriers[0] * 0.2)) < 1e-14);
}

TEST_CASE("zero drive and zeroth order give drift steps") {
  std::mt19937_64 rng(1);
  const SystemModel m = testing::random_system(rng, 3, 1);
  const double dt = 0.05;
  const Matrix drift = drift_propagator(m, dt);
  const std::vector<SubpixelSequence> zero{constant_sequence(6, dt, 0.0)};
  for (const auto& u : step_unitaries(prepare(m, 3, dt), zero)) CHECK(frobenius_distance(u, drift) < 1e-15);
  const std::vector<SubpixelSequence> driven{random_sequence(rng, 6, dt, 1.0)};
  for (const auto& u : step_unitaries(prepare(m, 0, dt), driven)) CHECK(frobenius_distance(u, drift) < 1e-15);
  const auto total = propagate(prepare(m, 3, dt), zero).total;
  CHECK(frobenius_distance(total, drift_propagator(m, 6 * dt)) < 1e-12);
}

TEST_CASE("resonant qubit steps are unitary at fourth order") {
  const SystemModel m = testing::qubit(5.0);
  const double dt = 1.0 / 40.0;
  const auto cache = prepare(m, 4, dt);
  const std::vector<SubpixelSequence> seqs{constant_sequence(400, dt, mhz_to_angular(40.0))};
  for (const auto& u : step_unitaries(cache, seqs)) CHECK(unitarity_defect(u) < 1e-8);
}

TEST_CASE("total propagator reduction") {
  std::mt19937_64 rng(2);
  std::vector<Matrix> steps;
  for (int i = 0; i < 37; ++i) steps.push_back(random_unitary(rng, 4));
  Matrix fold = steps[0];
  for (std::size_t i = 1; i < steps.size(); ++i) fold = steps[i] * fold;
  CHECK(frobenius_distance(total_propagator(steps), fold) < 1e-13);
  CHECK(total_propagator(std::span<const Matrix>(steps.data(), 1)) == steps[0]);
  CHECK(total_propagator(steps, 1) == total_propagator(steps, 4));
  const std::vector<Matrix> none;
  CHECK_THROWS_AS(total_propagator(none), Error);
  std::vector<Matrix> diag(5, Matrix(Eigen::VectorXcd::Constant(2, std::polar(1.0, 0.3)).asDiagonal()));
  CHECK(std::abs(total_propagator(diag)(1, 1) - std::polar(1.0, 1.5)) < 1e-15);
}

TEST_CASE("propagation agrees with the oracle") {
  std::mt19937_64 rng(3);
  const SystemModel m = testing::random_system(rng, 4, 2, 5.0, 0.3);
  const double dt = 0.02;
  const std::vector<SubpixelSequence> seqs{random_sequence(rng, 50, dt, 0.5), random_sequence(rng, 50, dt, 0.5)};
  const Matrix ref = reference_propagator(m, seqs);
  double prev = 1e9;
  for (std::size_t n = 1; n <= 4; ++n) {
    const double err = frobenius_distance(propagate(prepare(m, n, dt), seqs).total, ref);
    CAPTURE(n);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("linear interpolation uses the slope operators") {
  std::mt19937_64 rng(4);
  const SystemModel m = testing::random_system(rng, 3, 1, 5.0, 0.5);
  PulseSpec p;
  p.pixel_width = 1.0;
  p.subpixels_per_pixel = 20;
  p.filter_bandwidth = ghz_to_angular(0.4);
  p.interpolation = Interpolation::Linear;
  for (int j = 0; j < 4; ++j) p.pixels.emplace_back(0.4 + 0.1 * j, -0.2 * j);
  const std::vector<SubpixelSequence> seqs{subpixel_amplitudes(p)};
  const Matrix ref = reference_propagator(m, seqs);
  const auto cache = prepare(m, 4, p.subpixel_width(), {.with_slopes = true});
  const double err = frobenius_distance(propagate(cache, seqs).total, ref);
  MESSAGE("linear error " << err);
  // Terms with two or more slope insertions are not kept, so the error is
  // second order in slope * dt rather than at the truncation level.
  CHECK(err < 1e-5);
  // Dropping the slopes is a worse approximation of the same envelope.
  std::vector<SubpixelSequence> flat = seqs;
  for (std::size_t l = 0; l < flat[0].size(); ++l) flat[0].values[l] = flat[0].intercepts[l] + 0.5 * p.subpixel_width() * flat[0].slopes[l];
  flat[0].intercepts.clear();
  flat[0].slopes.clear();
  const double flat_err = frobenius_distance(propagate(cache, flat).total, ref);
  MESSAGE("midpoint error " << flat_err);
  CHECK(flat_err > 10.0 * err);
}

TEST_CASE("results do not depend on threads or block size") {
  std::mt19937_64 rng(5);
  const SystemModel m = testing::random_system(rng, 4, 2);
  const double dt = 0.05;
  const std::vector<SubpixelSequence> seqs{random_sequence(rng, 301, dt, 0.3), random_sequence(rng, 301, dt, 0.3)};
  const auto cache = prepare(m, 3, dt);
  ContractionOptions a{.threads = 1, .retain_steps = true, .block_size = 64};
  ContractionOptions b{.threads = 3, .retain_steps = true, .block_size = 64};
  const auto ra = propagate(cache, seqs, a);
  const auto rb = propagate(cache, seqs, b);
  CHECK(ra.total == rb.total);
  CHECK(ra.steps.size() == 301);
  CHECK(ra.num_subpixels == 301);
  b.block_size = 7;
  CHECK(frobenius_distance(propagate(cache, seqs, b).total, ra.total) < 1e-13);
}

TEST_CASE("propagator derivative") {
  std::mt19937_64 rng(6);
  SUBCASE("first order at zero amplitude is the + entry") {
    const SystemModel m = testing::random_system(rng, 3, 1);
    const auto cache = prepare(m, 1, 0.1);
    const std::vector<SubpixelSequence> seqs{constant_sequence(1, 0.1, 0.0)};
    const auto steps = step_unitaries(cache, seqs);
    const auto [du, dus] = propagator_derivative(cache, seqs, 0, steps);
    const FrequencyAssignment plus{{0}, {1}}, minus{{0}, {-1}};
    CHECK(frobenius_distance(du, build_dyson_operator(m, plus, 0.1)) < 1e-15);
    CHECK(frobenius_distance(dus, build_dyson_operator(m, minus, 0.1)) < 1e-15);
  }
  SUBCASE("matches finite differences") {
    const SystemModel m = testing::random_system(rng, 3, 2, 5.0, 0.5);
    const double dt = 0.04;
    std::vector<SubpixelSequence> seqs{random_sequence(rng, 9, dt, 0.5), random_sequence(rng, 9, dt, 0.5)};
    for (std::size_t n : {2, 3}) {
      const auto cache = prepare(m, n, dt);
      const auto steps = step_unitaries(cache, seqs);
      for (std::uint32_t ch = 0; ch < 2; ++ch) {
        for (std::size_t l : {0, 4, 8}) {
          const auto [du, dus] = propagator_derivative(cache, seqs, l, steps, ch);
          const double h = 1e-6;
          auto shifted = [&](Complex d) {
            auto s = seqs;
            s[ch].values[l] += d;
            return propagate(cache, s).total;
          };
          const Matrix fd_re = (shifted(h) - shifted(-h)) / (2 * h);
          const Matrix fd_im = (shifted(Complex(0, h)) - shifted(Complex(0, -h))) / (2 * h);
          CHECK(frobenius_distance(du + dus, fd_re) < 1e-6 * fd_re.norm());
          CHECK(frobenius_distance(Complex(0, 1) * (du - dus), fd_im) < 1e-6 * fd_im.norm());
        }
      }
    }
  }
}

TEST_CASE("mismatched sequences are rejected") {
  std::mt19937_64 rng(7);
  const SystemModel m = testing::random_system(rng, 3, 2);
  const auto cache = prepare(m, 2, 0.1);
  const std::vector<SubpixelSequence> one{constant_sequence(4, 0.1, 0.1)};
  CHECK_THROWS_AS(propagate(cache, one), Error);
  const std::vector<SubpixelSequence> ragged{constant_sequence(4, 0.1, 0.1), constant_sequence(5, 0.1, 0.1)};
  CHECK_THROWS_AS(propagate(cache, ragged), Error);
  const std::vector<SubpixelSequence> wrong_dt{constant_sequence(4, 0.2, 0.1), constant_sequence(4, 0.2, 0.1)};
  CHECK_THROWS_AS(propagate(cache, wrong_dt), Error);
}

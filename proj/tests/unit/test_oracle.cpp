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


#include <numbers>
#include <random>

#include "doctest.h"
#include "dysolve/oracle.hpp"
#include "../support.hpp"

using namespace dysolve;

namespace {

// Three levels, staircase of three 0.5 ns subpixels. The expected propagator
// was computed with scipy's DOP853 in the lab frame at rtol = atol = 1e-13.
SystemModel frozen_model() {
  SystemModel m;
  m.eigenvalues = {0.0, kTwoPi * 5.0, kTwoPi * 9.8};
  Matrix x(3, 3);
  x << 0, 1, 0.2, 1, 0, 1.4, 0.2, 1.4, 0;
  m.channels.push_back({x, kTwoPi * 5.0});
  return m;
}

std::vector<SubpixelSequence> frozen_sequence() {
  SubpixelSequence s;
  s.subpixel_width = 0.5;
  s.values = {0.2, Complex(0.2, -0.1), 0.35};
  return {s};
}

Matrix frozen_propagator() {
  Matrix u(3, 3);
  u << Complex(0.982246745523862, -0.001160442435347), Complex(-0.026136729768904, -0.184342025635900),
      Complex(-0.019703476555416, -0.011689578016535), Complex(-0.023768628781060, 0.185064132565234),
      Complex(-0.958797342137755, 0.018110033106735), Complex(-0.169986455135319, 0.129114707158842),
      Complex(-0.013447819329796, -0.013980685253331), Complex(0.176369734595280, -0.120864755287328),
      Complex(-0.320161464752772, 0.922716511573406);
  return u;
}

}  // namespace

TEST_CASE("adaptive integrator matches the frozen scipy propagator") {
  const Matrix u = reference_propagator(frozen_model(), frozen_sequence());
  CHECK(frobenius_distance(u, frozen_propagator()) < 1e-11);
  CHECK(unitarity_defect(u) < 1e-10);
}

TEST_CASE("magnus2 agrees with the adaptive integrator") {
  OracleSettings s;
  s.method = OracleMethod::FixedMagnus2;
  s.magnus_steps_per_ns = 2e5;
  const Matrix a = reference_propagator(frozen_model(), frozen_sequence());
  const Matrix b = reference_propagator(frozen_model(), frozen_sequence(), s);
  CHECK(frobenius_distance(a, b) < 1e-9);
}

TEST_CASE("zero drive gives the drift propagator") {
  std::mt19937_64 rng(1);
  const SystemModel m = testing::random_system(rng, 4, 1);
  SubpixelSequence s;
  s.subpixel_width = 0.3;
  s.values.assign(5, 0.0);
  const std::vector<SubpixelSequence> seqs{s};
  CHECK(frobenius_distance(reference_propagator(m, seqs), drift_propagator(m, 1.5)) < 1e-11);
}

TEST_CASE("resonant pi pulse transfers the population") {
  const double w = ghz_to_angular(5.0);
  const SystemModel m = testing::qubit(5.0);
  // Rotating-wave Rabi rate of Re(s e^{iwt}) sigma_x is |s|.
  const double omega = mhz_to_angular(50.0);
  const double t = std::numbers::pi / omega;
  PulseSpec p;
  p.pixels = {omega};
  p.pixel_width = t;
  const std::vector<PulseSpec> pulses{p};
  const Matrix u = reference_propagator(m, pulses);
  const double transfer = std::norm(u(1, 0));
  const double ratio = omega / w;
  CHECK(transfer > 1.0 - 4.0 * ratio * ratio);
  CHECK(transfer < 1.0 + 1e-12);
}

TEST_CASE("tightening tolerances moves the result by less than ten tolerances") {
  std::mt19937_64 rng(2);
  const SystemModel m = testing::random_system(rng, 3, 1, 5.0, 0.5);
  SubpixelSequence s;
  s.subpixel_width = 0.25;
  for (int l = 0; l < 8; ++l) s.values.emplace_back(0.3, 0.1 * l);
  const std::vector<SubpixelSequence> seqs{s};
  OracleSettings loose;
  loose.rel_tol = loose.abs_tol = 1e-10;
  OracleSettings tight;
  tight.rel_tol = tight.abs_tol = 5e-11;
  CHECK(frobenius_distance(reference_propagator(m, seqs, loose), reference_propagator(m, seqs, tight)) < 1e-9);
}

TEST_CASE("continuous and staircase envelopes coincide when unfiltered") {
  const SystemModel m = testing::qubit(5.0);
  PulseSpec p;
  p.pixels = {0.2, Complex(0.1, 0.3), -0.15};
  p.pixel_width = 0.5;
  p.subpixels_per_pixel = 1;
  const std::vector<PulseSpec> pulses{p};
  SubpixelSequence s;
  s.subpixel_width = 0.5;
  s.values = p.pixels;
  const std::vector<SubpixelSequence> seqs{s};
  CHECK(frobenius_distance(reference_propagator(m, pulses), reference_propagator(m, seqs)) < 1e-10);
}

TEST_CASE("settings and inputs are validated") {
  OracleSettings s;
  s.rel_tol = 0.0;
  CHECK_THROWS_AS(validate(s), Error);
  s.rel_tol = 1e-2;
  CHECK_THROWS_AS(validate(s), Error);
  s = {};
  s.max_substeps = 10;
  try {
    reference_propagator(frozen_model(), frozen_sequence(), s);
    FAIL("expected StepLimitExceeded");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StepLimitExceeded);
  }
  const std::vector<SubpixelSequence> none;
  CHECK_THROWS_AS(reference_propagator(frozen_model(), none), Error);
}

TEST_CASE("first-order simplex quadrature matches the closed form") {
  SystemModel m = testing::qubit(5.0);
  m.channels[0].carrier = ghz_to_angular(4.7);
  const double dt = 0.09, delta = ghz_to_angular(5.0), w = ghz_to_angular(4.7);
  const Matrix q = simplex_path_operator(m, {{0}, {1}}, dt);
  // (-i/2) int_0^dt e^{-i delta (dt - t)} e^{i w t} dt for the (1, 0) element
  const Complex k(0.0, delta + w);
  const Complex expect = Complex(0.0, -0.5) * std::polar(1.0, -delta * dt) * (std::exp(k * dt) - 1.0) / k;
  CHECK(std::abs(q(1, 0) - expect) < 1e-10);
  CHECK_THROWS_AS(simplex_path_operator(m, {{0, 0, 0}, {1, 1, 1}}, dt), Error);
}

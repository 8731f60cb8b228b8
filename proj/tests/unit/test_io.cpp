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


#include <fstream>

#include "doctest.h"
#include "dysolve/io.hpp"
#include "../support.hpp"

using namespace dysolve;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("matrices from nested, flat and complex forms") {
  const Matrix a = matrix_from_json(Json::parse("[[0, 1], [1, 0]]"));
  const Matrix b = matrix_from_json(Json::parse("[0, 1, 1, 0]"));
  CHECK(a == b);
  const Matrix c = matrix_from_json(Json::parse("[[0, [0, -1]], [[0, 1], 0]]"));
  CHECK(c(0, 1) == Complex(0.0, -1.0));
  CHECK(matrix_from_json(matrix_to_json(c)) == c);
  CHECK(kind_of([] { matrix_from_json(Json::parse("[[1, 2, 3], [4, 5, 6]]")); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { matrix_from_json(Json::parse("[1, 2, 3]")); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { matrix_from_json(Json::parse("[[1, 0], [0, 1]]"), 3); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("system JSON round trip") {
  const Json j = Json::parse(R"({"eigenvalues_ghz": [5.0, 0.0],
    "channels": [{"dipole": [[0, 1], [1, 0]], "carrier_ghz": 5.0}]})");
  const SystemModel m = system_from_json(j);
  CHECK(m.eigenvalues[0] == 0.0);
  CHECK(m.eigenvalues[1] == doctest::Approx(ghz_to_angular(5.0)));
  const SystemModel back = system_from_json(system_to_json(m));
  CHECK(back.eigenvalues == m.eigenvalues);
  CHECK(back.channels[0].dipole == m.channels[0].dipole);
  const Json bad = Json::parse(R"({"eigenvalues_ghz": [0, 5], "channels": [{"dipole": [[0, 1], [0, 0]], "carrier_ghz": 5}]})");
  CHECK(kind_of([&] { system_from_json(bad); }) == ErrorKind::NonHermitianDipole);
  CHECK(kind_of([] { system_from_json(Json::parse(R"({"channels": []})")); }) == ErrorKind::ConfigError);
}

TEST_CASE("pulse JSON") {
  const Json j = Json::parse(R"({"pixel_width_ns": 2, "subpixels_per_pixel": 4, "filter_bandwidth_ghz": 0.851,
    "interpolation": "linear",
    "channels": [{"pixels_mhz": [10, [5, -2]]}, {"constant_mhz": 3.5, "num_pixels": 2}]})");
  const auto p = pulses_from_json(j);
  REQUIRE(p.size() == 2);
  CHECK(p[0].pixel_width == 2.0);
  CHECK(p[0].subpixels_per_pixel == 4);
  CHECK(p[0].filtered());
  CHECK(p[0].interpolation == Interpolation::Linear);
  CHECK(std::abs(p[0].pixels[1] - Complex(mhz_to_angular(5.0), mhz_to_angular(-2.0))) < 1e-16);
  CHECK(p[1].pixels.size() == 2);
  CHECK(std::abs(p[1].pixels[0] - mhz_to_angular(3.5)) < 1e-16);
  const auto back = pulses_from_json(pulses_to_json(p));
  CHECK(std::abs(back[0].pixels[1] - p[0].pixels[1]) < 1e-16);
  CHECK(back[0].filter_bandwidth == doctest::Approx(p[0].filter_bandwidth));
  CHECK(kind_of([] { pulses_from_json(Json::parse(R"({"pixel_width_ns": 0, "channels": [{"pixels_mhz": [1]}]})")); }) ==
        ErrorKind::ConfigError);
  CHECK(kind_of([] {
          pulses_from_json(Json::parse(R"({"pixel_width_ns": 1, "interpolation": "cubic", "channels": [{"pixels_mhz": [1]}]})"));
        }) == ErrorKind::ConfigError);
}

TEST_CASE("optimization JSON") {
  const auto cfg = optimization_from_json(Json::parse(R"({"target": "X90", "frame": "drift",
    "epsilon_policy": "fixed", "epsilon": 0.5, "max_iters": 7, "tolerances": {"infidelity": 1e-6}})"));
  CHECK(cfg.drift_frame);
  CHECK(cfg.target.subspace == std::vector<std::size_t>{0, 1});
  CHECK(cfg.grape.policy == StepPolicy::Fixed);
  CHECK(cfg.grape.epsilon == 0.5);
  CHECK(cfg.grape.max_iters == 7);
  CHECK(cfg.grape.tolerance == 1e-6);
  CHECK(kind_of([] { optimization_from_json(Json::parse(R"({"target": "Q"})")); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { optimization_from_json(Json::parse(R"({"target": "X90", "epsilon": -1})")); }) ==
        ErrorKind::ConfigError);
}

TEST_CASE("files and sections") {
  const auto dir = testing::scratch_dir("io");
  write_text_atomic(dir / "s.json", R"({"a": 1})");
  CHECK(load_json(dir / "s.json")["a"] == 1);
  CHECK(resolve_section(Json("s.json"), dir)["a"] == 1);
  CHECK(resolve_section(Json::parse(R"({"b": 2})"), dir)["b"] == 2);
  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  CHECK(kind_of([&] { load_json(dir / "broken.json"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([&] { load_json(dir / "missing.json"); }) == ErrorKind::IoError);
  CHECK(kind_of([&] { resolve_section(Json(3), dir); }) == ErrorKind::ConfigError);
}

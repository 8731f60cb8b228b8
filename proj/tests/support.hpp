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

// Small random systems shared by the unit and acceptance tests.

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "dysolve/core.hpp"

namespace dysolve::testing {

inline Matrix random_hermitian(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  const auto k = static_cast<Eigen::Index>(n);
  Matrix a(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = Complex(nd(rng), nd(rng));
  }
  return (0.5 * (a + a.adjoint())).eval();
}

// Levels spaced by roughly `spacing_ghz`, dense dipoles, carriers near the
// first transition.
inline SystemModel random_system(std::mt19937_64& rng, std::size_t n, std::size_t channels,
                                 double spacing_ghz = 5.0, double dipole_scale = 1.0) {
  std::normal_distribution<double> nd;
  SystemModel m;
  for (std::size_t i = 0; i < n; ++i) {
    m.eigenvalues.push_back(ghz_to_angular(spacing_ghz * static_cast<double>(i) + 0.1 * nd(rng)));
  }
  for (std::size_t c = 0; c < channels; ++c) {
    m.channels.push_back({random_hermitian(rng, n, dipole_scale),
                          ghz_to_angular(spacing_ghz + 0.05 * static_cast<double>(c) + 0.02 * nd(rng))});
  }
  return validate_system(std::move(m)).model;
}

inline SystemModel qubit(double ghz = 5.0) {
  SystemModel m;
  m.eigenvalues = {0.0, ghz_to_angular(ghz)};
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  m.channels.push_back({x, ghz_to_angular(ghz)});
  return m;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dysolve_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace dysolve::testing

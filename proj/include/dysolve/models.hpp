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

#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "dysolve/control.hpp"
#include "dysolve/core.hpp"
#include "dysolve/pulses.hpp"

namespace dysolve {

/// Fixed-frequency transmon 4 E_C n^2 - E_J cos(phi) in the charge basis
/// -n_max..n_max. Energies in rad/ns.
struct TransmonSpec {
  double e_c = 0.0;
  double e_j = 0.0;
  std::size_t charge_cutoff = 15;
  std::size_t keep_levels = 5;
};

struct TransmonLevels {
  std::vector<double> eigenvalues;  // lowest keep_levels, ground shifted to 0
  Matrix charge;                    // n in the eigenbasis, keep_levels x keep_levels
  double omega01() const { return eigenvalues.at(1) - eigenvalues.at(0); }
  double anharmonicity() const { return eigenvalues.at(2) - 2.0 * eigenvalues.at(1) + eigenvalues.at(0); }
};

/// Throws InvalidArgument or CutoffTooSmall (kept levels move by more than
/// 1e-8 rad/ns when the cutoff grows by 5).
TransmonLevels build_transmon(const TransmonSpec& spec);

/// Newton iteration (finite-difference Jacobian) for E_C, E_J reproducing
/// omega01 and alpha (rad/ns) to 1e-6 GHz. Throws NoConvergence.
TransmonSpec calibrate_transmon(double omega01, double alpha, std::size_t charge_cutoff = 15,
                                std::size_t keep_levels = 5);

struct CoupledSpec {
  TransmonSpec control;
  TransmonSpec target;
  double g = 0.0;  // rad/ns
  std::size_t levels_per_qubit = 5;
};

struct CrossResonanceSystem {
  SystemModel model;  // channel 0 drives the control charge, channel 1 the target charge
  GateTarget target;  // ZX90 on (|00>, |01>, |10>, |11>), control first; no frame phases
  /// Dressed index -> (control level, target level) by maximal overlap.
  std::vector<std::pair<std::size_t, std::size_t>> labels;
  double target_frequency = 0.0;  // dressed E(|01>) - E(|00>), rad/ns
  double min_overlap_margin = 0.0;
};

/// Throws InvalidArgument or HybridizationAmbiguity.
CrossResonanceSystem build_cross_resonance(const CoupledSpec& spec);

/// Paper-style default: transmons calibrated to 5.1/4.9 GHz, -355/-352 MHz,
/// g/2pi = 4.29 MHz, five levels each. target_ghz overrides the target qubit
/// frequency (detuning sweeps).
CoupledSpec default_cross_resonance_spec(double target_ghz = 4.9);

struct BenchmarkEnsembleSpec {
  std::uint64_t seed = 0;
  std::size_t dim = 25;
  std::size_t num_drives = 1;
  double eigenvalue_mean_ghz = 7.0;
  double eigenvalue_std_ghz = 0.5;
  double offresonant_fill = 0.2;
  double offresonant_std = 0.1;
  double amplitude_mean_mhz = 40.0;
  double amplitude_std_mhz = 1.0;
  double duration_ns = 500.0;
  double pixel_width_ns = 1.0;
  std::size_t subpixels_per_pixel = 1;
  double filter_bandwidth = std::numeric_limits<double>::infinity();
};

struct BenchmarkInstance {
  SystemModel model;
  std::vector<PulseSpec> pulses;  // one per drive
};

/// Deterministic given the seed (Boost.Random mt19937_64 and distributions,
/// which are specified bit-for-bit across platforms).
BenchmarkInstance build_benchmark_ensemble(const BenchmarkEnsembleSpec& spec);

}  // namespace dysolve

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

#include <optional>
#include <span>
#include <vector>

#include "dysolve/dyson.hpp"
#include "dysolve/pulses.hpp"

namespace dysolve {

// Independent references used for verification only. Nothing here shares code
// with the Dyson preparation or contraction paths.

enum class OracleMethod { AdaptiveRK, FixedMagnus2 };

struct OracleSettings {
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  std::size_t max_substeps = 200'000'000;
  OracleMethod method = OracleMethod::AdaptiveRK;
  /// Midpoint steps per ns for FixedMagnus2.
  double magnus_steps_per_ns = 1e5;
};

/// Throws InvalidArgument unless both tolerances lie in (0, 1e-3].
void validate(const OracleSettings& settings);

/// U(0, T) for the staircase (or, for linear sequences, piecewise-linear)
/// envelope defined by per-channel subpixel sequences; T = P dt. Each
/// subpixel is integrated separately so the envelope jumps are resolved
/// exactly. Throws StepLimitExceeded or ToleranceNotMet.
Matrix reference_propagator(const SystemModel& model, std::span<const SubpixelSequence> seqs,
                            const OracleSettings& settings = {});

/// U(0, T) for the continuous filtered envelope of each channel's pulse
/// (T = pulse duration).
Matrix reference_propagator(const SystemModel& model, std::span<const PulseSpec> pulses,
                            const OracleSettings& settings = {});

/// Direct nested Gauss-Legendre evaluation of the order-m path integral
///   (-i/2)^m int_{0<t_1<..<t_m<dt} e^{-iH0(dt-t_m)} X e^{-iH0(t_m-t_{m-1})} .. X e^{-iH0 t_1}
///   prod_p e^{i w[p] t_p}
/// with points doubled until the result moves by less than 1e-10. With
/// slope_position p the integrand is also multiplied by t_{p+1} (0-based p),
/// giving the slope operator. m <= 2. Throws QuadratureNotConverged.
Matrix simplex_path_operator(const SystemModel& model, const FrequencyAssignment& a, double dt,
                             std::optional<std::size_t> slope_position = std::nullopt);

}  // namespace dysolve

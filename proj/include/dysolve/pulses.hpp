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

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "dysolve/core.hpp"

namespace dysolve {

enum class Interpolation { Constant, Linear };

/// Piecewise-constant pixel envelope for one drive channel, seen through a
/// Gaussian filter of bandwidth `filter_bandwidth` (infinity disables it).
struct PulseSpec {
  std::vector<Complex> pixels;  // rad/ns
  double pixel_width = 1.0;     // ns
  std::size_t subpixels_per_pixel = 1;
  double filter_bandwidth = std::numeric_limits<double>::infinity();  // rad/ns
  Interpolation interpolation = Interpolation::Constant;

  std::size_t num_pixels() const { return pixels.size(); }
  std::size_t num_subpixels() const { return pixels.size() * subpixels_per_pixel; }
  double subpixel_width() const { return pixel_width / static_cast<double>(subpixels_per_pixel); }
  double duration() const { return pixel_width * static_cast<double>(pixels.size()); }
  bool filtered() const { return std::isfinite(filter_bandwidth); }
};

void validate(const PulseSpec& spec);

/// Per-subpixel drive amplitudes for one channel. In linear mode subpixel l
/// carries intercepts[l] + slopes[l] * (t - l*dt) and `values` holds the
/// left-edge samples the slopes were built from.
struct SubpixelSequence {
  std::vector<Complex> values;
  std::vector<Complex> intercepts;
  std::vector<Complex> slopes;
  double subpixel_width = 0.0;

  std::size_t size() const { return values.size(); }
  bool linear() const { return !slopes.empty(); }
  /// Amplitude used as the constant term on subpixel l.
  Complex level(std::size_t l) const { return linear() ? intercepts[l] : values[l]; }
  Complex slope(std::size_t l) const { return linear() ? slopes[l] : Complex{}; }
};

/// Filter matrix T (subpixels x pixels):
///   T[l][j] = (erf(w0 (l dt - j Dt)/2) - erf(w0 (l dt - (j+1) Dt)/2)) / 2
/// with erf replaced by sign (sign(0) = 0) at infinite bandwidth.
RealMatrix filter_matrix(const PulseSpec& spec);

/// The real linear maps taking the pixel vector u to the subpixel sequence:
/// values = T u, intercepts = A u, slopes = B u. A and B are empty in
/// constant mode.
struct PulseMaps {
  RealMatrix values;
  RealMatrix intercepts;
  RealMatrix slopes;

  bool linear() const { return slopes.size() != 0; }
};

PulseMaps pulse_maps(const PulseSpec& spec);

SubpixelSequence apply_maps(const PulseMaps& maps, std::span<const Complex> pixels,
                            double subpixel_width);

SubpixelSequence subpixel_amplitudes(const PulseSpec& spec);

/// Filtered continuous envelope sum_j u_j k_j(t), where k_j is the filter
/// response to pixel j.
Complex filtered_envelope(const PulseSpec& spec, double t);

/// Response of pixel j at time t (the column kernel behind T).
double pixel_kernel(const PulseSpec& spec, std::size_t j, double t);

}  // namespace dysolve

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

#include "dysolve/pulses.hpp"

#include <cmath>

#include "dysolve/quadrature.hpp"

namespace dysolve {

namespace {

constexpr std::size_t kInterceptQuadraturePoints = 16;

// erf(x) == +-1 in double precision beyond this argument.
constexpr double kErfSaturation = 6.5;

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double step_sign(std::ptrdiff_t k) { return k > 0 ? 1.0 : (k < 0 ? -1.0 : 0.0); }

}  // namespace

void validate(const PulseSpec& spec) {
  if (spec.pixels.empty()) throw Error(ErrorKind::InvalidArgument, "pulse needs at least one pixel");
  if (!(spec.pixel_width > 0.0) || !std::isfinite(spec.pixel_width)) {
    throw Error(ErrorKind::InvalidArgument, "pixel width must be positive");
  }
  if (spec.subpixels_per_pixel < 1) {
    throw Error(ErrorKind::InvalidArgument, "need at least one subpixel per pixel");
  }
  if (!(spec.filter_bandwidth > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "filter bandwidth must be positive (or infinite)");
  }
  for (const auto& u : spec.pixels) {
    if (!std::isfinite(u.real()) || !std::isfinite(u.imag())) {
      throw Error(ErrorKind::InvalidArgument, "non-finite pixel amplitude");
    }
  }
}

double pixel_kernel(const PulseSpec& spec, std::size_t j, double t) {
  const double left = t - static_cast<double>(j) * spec.pixel_width;
  const double right = t - static_cast<double>(j + 1) * spec.pixel_width;
  if (!spec.filtered()) return 0.5 * (sign0(left) - sign0(right));
  const double w = spec.filter_bandwidth;
  return 0.5 * (std::erf(0.5 * w * left) - std::erf(0.5 * w * right));
}

Complex filtered_envelope(const PulseSpec& spec, double t) {
  Complex out = 0.0;
  for (std::size_t j = 0; j < spec.pixels.size(); ++j) out += spec.pixels[j] * pixel_kernel(spec, j, t);
  return out;
}

RealMatrix filter_matrix(const PulseSpec& spec) {
  validate(spec);
  const auto rows = static_cast<Eigen::Index>(spec.num_subpixels());
  const auto cols = static_cast<Eigen::Index>(spec.num_pixels());
  const auto ns = static_cast<std::ptrdiff_t>(spec.subpixels_per_pixel);
  const double dt = spec.subpixel_width();
  RealMatrix t = RealMatrix::Zero(rows, cols);
  for (Eigen::Index l = 0; l < rows; ++l) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      // Offsets in whole subpixels keep pixel edges exact.
      const std::ptrdiff_t left = l - j * ns;
      const std::ptrdiff_t right = l - (j + 1) * ns;
      if (!spec.filtered()) {
        t(l, j) = 0.5 * (step_sign(left) - step_sign(right));
        continue;
      }
      const double a = 0.5 * spec.filter_bandwidth * static_cast<double>(left) * dt;
      const double b = 0.5 * spec.filter_bandwidth * static_cast<double>(right) * dt;
      if ((a > kErfSaturation && b > kErfSaturation) || (a < -kErfSaturation && b < -kErfSaturation)) {
        continue;
      }
      t(l, j) = 0.5 * (std::erf(a) - std::erf(b));
    }
  }
  return t;
}

PulseMaps pulse_maps(const PulseSpec& spec) {
  PulseMaps maps;
  maps.values = filter_matrix(spec);
  if (spec.interpolation == Interpolation::Constant) return maps;

  const Eigen::Index rows = maps.values.rows();
  const Eigen::Index cols = maps.values.cols();
  const double dt = spec.subpixel_width();
  maps.slopes = RealMatrix::Zero(rows, cols);
  for (Eigen::Index l = 0; l + 1 < rows; ++l) {
    maps.slopes.row(l) = (maps.values.row(l + 1) - maps.values.row(l)) / dt;
  }

  // Intercepts make each linear segment integrate to the filtered pulse.
  const auto& rule = gauss_legendre(kInterceptQuadraturePoints);
  maps.intercepts = RealMatrix::Zero(rows, cols);
  for (Eigen::Index l = 0; l < rows; ++l) {
    const double t0 = static_cast<double>(l) * dt;
    const double t1 = t0 + dt;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double p0 = static_cast<double>(j) * spec.pixel_width;
      const double p1 = p0 + spec.pixel_width;
      const double gap = std::max({0.0, p0 - t1, t0 - p1});
      double integral = 0.0;
      if (!spec.filtered() || 0.5 * spec.filter_bandwidth * gap <= kErfSaturation) {
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
          const double t = t0 + 0.5 * dt * (rule.nodes[q] + 1.0);
          integral += 0.5 * dt * rule.weights[q] * pixel_kernel(spec, static_cast<std::size_t>(j), t);
        }
      }
      maps.intercepts(l, j) = integral / dt - 0.5 * dt * maps.slopes(l, j);
    }
  }
  return maps;
}

SubpixelSequence apply_maps(const PulseMaps& maps, std::span<const Complex> pixels,
                            double subpixel_width) {
  if (static_cast<std::size_t>(maps.values.cols()) != pixels.size()) {
    throw Error(ErrorKind::LengthMismatch, "pixel vector does not match pulse maps");
  }
  const Eigen::Map<const Eigen::VectorXcd> u(pixels.data(), static_cast<Eigen::Index>(pixels.size()));
  const Eigen::VectorXd re = u.real();
  const Eigen::VectorXd im = u.imag();
  auto to_vec = [&](const RealMatrix& m) {
    const Eigen::VectorXd vr = m * re;
    const Eigen::VectorXd vi = m * im;
    std::vector<Complex> out(static_cast<std::size_t>(vr.size()));
    for (Eigen::Index i = 0; i < vr.size(); ++i) out[static_cast<std::size_t>(i)] = {vr(i), vi(i)};
    return out;
  };
  SubpixelSequence seq;
  seq.subpixel_width = subpixel_width;
  seq.values = to_vec(maps.values);
  if (maps.linear()) {
    seq.intercepts = to_vec(maps.intercepts);
    seq.slopes = to_vec(maps.slopes);
  }
  return seq;
}

SubpixelSequence subpixel_amplitudes(const PulseSpec& spec) {
  return apply_maps(pulse_maps(spec), spec.pixels, spec.subpixel_width());
}

}  // namespace dysolve

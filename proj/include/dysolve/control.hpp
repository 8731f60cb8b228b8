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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dysolve/propagate.hpp"
#include "dysolve/pulses.hpp"

namespace dysolve {

/// Target gate on a d-dimensional subspace of drift eigenstates.
///
/// When `frame_phases` is set (length d), the subspace block B of U is
/// compared as diag(exp(i frame_phases)) B, i.e. in the frame rotating with
/// the drift. build_cross_resonance fills it with lambda_k T.
struct GateTarget {
  Matrix target;
  std::vector<std::size_t> subspace;
  std::vector<double> frame_phases;

  std::size_t dim() const { return subspace.size(); }
};

/// Throws InvalidArgument (non-unitary target, bad shapes) or IndexOutOfRange.
void validate(const GateTarget& target, std::size_t system_dim);

/// Drift frame phases lambda_k T for the subspace states.
std::vector<double> drift_frame_phases(const SystemModel& model, const std::vector<std::size_t>& subspace,
                                       double duration);

/// Tr(U_target^dagger F B), the quantity whose squared modulus is the fidelity.
Complex gate_overlap(const Matrix& u, const GateTarget& target);

/// (1/d^2) |Tr(U_target^dagger B)|^2
double fidelity(const Matrix& u, const GateTarget& target);

/// Named gates: "X90" (exp(-i pi/4 X)), "ZX90" (exp(-i pi/4 Z x X), control
/// qubit first), "X" and "I" / "identity" of dimension 2 unless stated.
Matrix named_gate(const std::string& name);

/// Maximizes the fidelity over local Z rotations applied before and after U
/// (two angles per qubit; d must be a power of two). The returned target has
/// the optimal rotations folded in, so plain fidelity against it equals the
/// corrected fidelity.
GateTarget local_z_corrected_target(const Matrix& u, const GateTarget& target);
double local_z_corrected_fidelity(const Matrix& u, const GateTarget& target);

/// Complex pixel amplitudes per channel (rad/ns).
using PixelSet = std::vector<std::vector<Complex>>;

struct GradientReport {
  double fidelity = 0.0;
  /// dPhi/d Re(u_j) and dPhi/d Im(u_j), one vector per channel.
  std::vector<Eigen::VectorXd> grad_x;
  std::vector<Eigen::VectorXd> grad_y;

  double max_abs() const;
  double norm() const;
};

struct ObjectiveOptions {
  unsigned threads = 0;
  /// Complex entries kept in memory for steps and backward products; longer
  /// schedules are processed in recomputed blocks.
  std::size_t memory_budget_entries = std::size_t{1} << 26;
};

/// Fidelity of a pulse schedule and its exact gradient with respect to pixel
/// amplitudes, for a fixed cache, pulse geometry and target.
class FidelityObjective {
 public:
  /// specs supply the geometry (pixel count, widths, filter, interpolation)
  /// for each channel; their pixel values are ignored.
  FidelityObjective(const DysonCache& cache, std::vector<PulseSpec> specs, GateTarget target,
                    ObjectiveOptions options = {});

  std::size_t num_channels() const { return specs_.size(); }
  const std::vector<PulseSpec>& specs() const { return specs_; }
  const GateTarget& target() const { return target_; }

  std::vector<SubpixelSequence> sequences(const PixelSet& pixels) const;
  Matrix propagator(const PixelSet& pixels) const;
  double fidelity(const PixelSet& pixels) const;
  GradientReport evaluate(const PixelSet& pixels) const;

  /// Replace the maps used to pull subpixel gradients back to pixels
  /// (testing only: a mismatch must make gradient checks fail).
  void override_chain_maps(std::vector<PulseMaps> maps);

 private:
  void check_pixels(const PixelSet& pixels) const;

  Contractor contractor_;
  std::vector<PulseSpec> specs_;
  std::vector<PulseMaps> maps_;
  std::vector<PulseMaps> chain_maps_;
  GateTarget target_;
  ObjectiveOptions options_;
  std::size_t num_subpixels_ = 0;
  double subpixel_width_ = 0.0;
};

/// Central finite differences of the fidelity in Re/Im of every pixel.
GradientReport finite_difference_gradient(const FidelityObjective& objective, const PixelSet& pixels,
                                          double step = 1e-6);

/// max_j |a_j - b_j| / max(||b||_inf, floor) across all channels/quadratures.
double gradient_relative_error(const GradientReport& analytic, const GradientReport& reference,
                               double floor = 1e-8);

struct FlatPulseResult {
  std::vector<Complex> amplitudes;  // one constant pixel value per channel
  double fidelity = 0.0;
  GateTarget target;  // objective target, with local Z folded in when requested
};

/// Nelder-Mead over constant per-channel amplitudes. With local_z the score
/// is the local-Z-corrected fidelity (virtual Z gates are free).
FlatPulseResult optimize_flat_amplitudes(const FidelityObjective& objective, std::vector<Complex> initial,
                                         double initial_step, std::size_t max_iters = 2000,
                                         bool local_z = false);
PixelSet flat_pixels(const FidelityObjective& objective, const std::vector<Complex>& amplitudes);

enum class StepPolicy { Fixed, Backtracking };

struct GrapeSettings {
  StepPolicy policy = StepPolicy::Backtracking;
  double epsilon = 0.1;
  std::size_t max_iters = 500;
  double tolerance = 1e-10;           // stop when 1 - Phi < tolerance
  double gradient_tolerance = 1e-10;  // stop when ||grad||_2 < gradient_tolerance
  double armijo = 1e-4;
  double shrink = 0.5;
  std::size_t max_halvings = 40;
  /// Optional early stop once 1 - Phi drops below this value.
  std::optional<double> target_infidelity;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double fidelity = 0.0;
  double epsilon = 0.0;
  double gradient_norm = 0.0;
};

struct OptimizationTrace {
  std::vector<IterationRecord> iterations;
  PixelSet pixels;
  double fidelity = 0.0;
  std::string reason;  // "max_iters", "gradient_tolerance", "fidelity_tolerance", "target_infidelity"
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Gradient ascent u <- u + eps * (grad_x + i grad_y). Throws
/// NoAscentDirection when the line search exhausts its halvings.
OptimizationTrace grape_optimize(const FidelityObjective& objective, PixelSet initial, const GrapeSettings& settings,
                                 const IterationCallback& callback = {});

}  // namespace dysolve

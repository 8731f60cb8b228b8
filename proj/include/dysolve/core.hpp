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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dysolve {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Internal units are ns and rad/ns. Configs speak GHz and MHz.
inline constexpr double ghz_to_angular(double ghz) { return kTwoPi * ghz; }
inline constexpr double mhz_to_angular(double mhz) { return kTwoPi * mhz * 1e-3; }
inline constexpr double angular_to_ghz(double w) { return w / kTwoPi; }
inline constexpr double angular_to_mhz(double w) { return w / kTwoPi * 1e3; }

enum class ErrorKind {
  NonHermitianDipole,
  DimensionMismatch,
  InvalidArgument,
  EmptyNodes,
  IndexOutOfRange,
  UnsupportedOrder,
  CacheTooLarge,
  FingerprintMismatch,
  CorruptCache,
  VersionMismatch,
  LengthMismatch,
  StepLimitExceeded,
  ToleranceNotMet,
  QuadratureNotConverged,
  NoAscentDirection,
  CutoffTooSmall,
  NoConvergence,
  HybridizationAmbiguity,
  ConfigError,
  IoError,
  NonFiniteResult,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// One drive input: a dipole operator in the drift eigenbasis and its carrier.
struct DriveChannel {
  Matrix dipole;
  double carrier = 0.0;  // rad/ns
};

/// Diagonal drift Hamiltonian plus drive channels.
///
/// The drive on channel c is Re(s_c(t) e^{i w_c t}) X_c, so a real amplitude
/// s produces s cos(w t) X.
struct SystemModel {
  std::vector<double> eigenvalues;  // rad/ns
  std::vector<DriveChannel> channels;

  std::size_t dim() const { return eigenvalues.size(); }
  std::size_t num_channels() const { return channels.size(); }
};

struct CheckedSystem {
  SystemModel model;
  // permutation[i] is the input index of the state now stored at index i.
  std::vector<std::size_t> permutation;
};

inline constexpr double kHermitianSymmetrizeTol = 1e-9;

/// Sorts eigenvalues ascending (permuting dipoles to match) and symmetrizes
/// dipoles whose Hermiticity defect is below kHermitianSymmetrizeTol.
CheckedSystem validate_system(SystemModel model);

double frobenius_distance(const Matrix& a, const Matrix& b);

/// ||U^dagger U - I||_F
double unitarity_defect(const Matrix& u);

/// diag(exp(-i lambda_k t))
Matrix drift_propagator(const SystemModel& model, double t);

/// Stable 64-bit FNV-1a digest of the model's numeric content.
std::uint64_t fingerprint(const SystemModel& model);

}  // namespace dysolve

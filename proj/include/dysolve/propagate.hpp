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

#include <span>
#include <utility>
#include <vector>

#include "dysolve/dyson.hpp"
#include "dysolve/pulses.hpp"

namespace dysolve {

/// exp(i sum(w) l dt) * prod_p (s or s*) for channel sequences seqs[channel].
/// In linear mode the level (intercept) is used.
Complex coefficient(std::size_t l, const FrequencyAssignment& a, std::span<const SubpixelSequence> seqs,
                    std::span<const double> carriers);

/// Same, with the amplitude at `position` replaced by that channel's slope.
Complex slope_coefficient(std::size_t l, const FrequencyAssignment& a, std::size_t position,
                          std::span<const SubpixelSequence> seqs, std::span<const double> carriers);

enum class AmplitudeKind { Level, Slope };

/// One independent complex variable of subpixel l: the level or slope of a
/// channel, or its conjugate (Wirtinger calculus treats them separately).
struct AmplitudeVariable {
  std::uint32_t channel = 0;
  AmplitudeKind kind = AmplitudeKind::Level;
  bool conjugate = false;
};

/// Precomputed contraction data for one cache: the operators flattened into a
/// K x N^2 matrix and, per column, the monomial that multiplies it.
class Contractor {
 public:
  explicit Contractor(const DysonCache& cache);

  std::size_t dim() const { return dim_; }
  std::size_t order() const { return order_; }
  std::size_t num_terms() const { return factors_.size(); }
  std::size_t num_channels() const { return carriers_.size(); }
  double subpixel_width() const { return dt_; }
  bool uses_slopes() const { return uses_slopes_; }

  /// Throws LengthMismatch / InvalidArgument when seqs does not fit the cache.
  void check(std::span<const SubpixelSequence> seqs) const;

  /// Rows l0..l1-1 of the P x K coefficient tensor.
  Eigen::MatrixXcd coefficients(std::span<const SubpixelSequence> seqs, std::size_t l0, std::size_t l1) const;

  /// d coefficient / d variable for subpixel l (length K).
  Eigen::VectorXcd coefficient_derivative(std::span<const SubpixelSequence> seqs, std::size_t l,
                                          const AmplitudeVariable& v) const;

  /// Steps l0..l1-1 via one GEMM.
  std::vector<Matrix> steps(std::span<const SubpixelSequence> seqs, std::size_t l0, std::size_t l1) const;

  /// sum_r w[r] S_r
  Matrix combine(const Eigen::VectorXcd& w) const;

  /// Tr(M S_r) for every term r.
  Eigen::VectorXcd traces(const Matrix& m) const;

 private:
  struct Factor {
    std::uint32_t channel;
    bool conjugate;
    AmplitudeKind kind;
  };

  Complex factor_value(const Factor& f, std::span<const SubpixelSequence> seqs, std::size_t l) const;

  std::size_t dim_ = 0;
  std::size_t order_ = 0;
  double dt_ = 0.0;
  bool uses_slopes_ = false;
  std::vector<double> carriers_;
  std::vector<std::vector<Factor>> factors_;
  std::vector<double> frequency_sum_;
  Eigen::MatrixXcd ops_;  // K x N^2, each row a column-major flattened operator
};

std::vector<Matrix> step_unitaries(const DysonCache& cache, std::span<const SubpixelSequence> seqs,
                                   unsigned threads = 0);

/// U_{P-1} ... U_1 U_0 by an order-preserving balanced tree. Throws
/// DimensionMismatch or InvalidArgument on empty input.
Matrix total_propagator(std::span<const Matrix> steps, unsigned threads = 0);

struct ContractionOptions {
  unsigned threads = 0;
  bool retain_steps = false;
  std::size_t block_size = 512;  // subpixels per GEMM block
};

struct PropagatorResult {
  Matrix total;
  std::vector<Matrix> steps;  // filled when retain_steps
  std::size_t order = 0;
  double subpixel_width = 0.0;
  std::size_t num_subpixels = 0;
};

/// Contraction stage. The block partition and reduction tree depend only on
/// P and block_size, so results do not depend on the thread count.
PropagatorResult propagate(const DysonCache& cache, std::span<const SubpixelSequence> seqs,
                           const ContractionOptions& options = {});
PropagatorResult propagate(const Contractor& contractor, std::span<const SubpixelSequence> seqs,
                           const ContractionOptions& options = {});

/// (dU/ds_l, dU/ds_l*) for one channel's level at subpixel l, given all steps.
std::pair<Matrix, Matrix> propagator_derivative(const DysonCache& cache, std::span<const SubpixelSequence> seqs,
                                                std::size_t l, std::span<const Matrix> steps,
                                                std::uint32_t channel = 0);

}  // namespace dysolve

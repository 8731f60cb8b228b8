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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dysolve/core.hpp"

namespace dysolve {

inline constexpr std::size_t kMaxTruncationOrder = 4;

/// Which channel and which rotating component (+1 for e^{+iwt}, -1 for
/// e^{-iwt}) acts at each drive insertion of an order-m Dyson term. Position 0
/// is the earliest insertion (rightmost operator). Channels are 0-based.
struct FrequencyAssignment {
  std::vector<std::uint32_t> channels;
  std::vector<int> signs;

  std::size_t order() const { return channels.size(); }

  /// Canonical order: by order, then channels, then signs.
  friend std::strong_ordering operator<=>(const FrequencyAssignment& a, const FrequencyAssignment& b) {
    if (auto c = a.order() <=> b.order(); c != 0) return c;
    if (auto c = a.channels <=> b.channels; c != 0) return c;
    return a.signs <=> b.signs;
  }
  friend bool operator==(const FrequencyAssignment&, const FrequencyAssignment&) = default;
};

/// Signed frequency of each insertion: signs[p] * carriers[channels[p]].
std::vector<double> signed_frequencies(const FrequencyAssignment& a, std::span<const double> carriers);

/// c[j] = sum_{p >= j} w[p] for j < m, c[m] = 0: the frequency shift of the
/// eigenvalue node that lives between insertions j-1 and j.
std::vector<double> cumulative_vector(const FrequencyAssignment& a, std::span<const double> carriers);
std::vector<double> cumulative_vector(const FrequencyAssignment& a, const SystemModel& model);

/// Number of +1 entries, i.e. the power of s (vs. s*) in the amplitude factor.
int plus_count(const FrequencyAssignment& a);

/// Per-position exponent of s: 1 for a + insertion, 0 for a - insertion.
std::vector<int> plus_exponents(const FrequencyAssignment& a);

/// All assignments of orders 0..order over q channels, in canonical order.
std::vector<FrequencyAssignment> enumerate_assignments(std::size_t order, std::size_t num_channels);

/// sum_{m=0}^{order} (2q)^m
std::size_t expected_entry_count(std::size_t order, std::size_t num_channels);

/// sum_{m=0}^{order} m (2q)^m
std::size_t expected_slope_entry_count(std::size_t order, std::size_t num_channels);

/// Dyson operator S^(m)(w, dt) in the drift eigenbasis:
///   (-i dt/2)^m sum_k f((lambda_k - c) dt) X[k_m,k_{m-1}] ... X[k_1,k_0] |k_m><k_0|
/// and exp(-i H0 dt) for m = 0.
Matrix build_dyson_operator(const SystemModel& model, const FrequencyAssignment& a, double dt);

/// -i dS/dw[position]: the operator multiplying a linear-in-time amplitude
/// (slope) at that insertion. position is 0-based.
Matrix build_slope_operator(const SystemModel& model, const FrequencyAssignment& a,
                            std::size_t position, double dt);

struct DysonEntry {
  FrequencyAssignment assignment;
  Matrix op;
};

struct SlopeEntry {
  FrequencyAssignment assignment;
  std::uint32_t position = 0;
  Matrix op;
};

/// Preparation-stage output. Entries are stored in canonical assignment
/// order; slope entries by (assignment, position).
struct DysonCache {
  std::size_t truncation_order = 0;
  double subpixel_width = 0.0;
  std::size_t dim = 0;
  std::vector<double> carriers;
  std::uint64_t system_fingerprint = 0;
  std::vector<DysonEntry> entries;
  std::vector<SlopeEntry> slope_entries;

  std::size_t num_channels() const { return carriers.size(); }
  bool has_slopes() const { return !slope_entries.empty(); }
};

/// ChainSum walks every chain of dipole elements (cheap for sparse dipoles);
/// BlockExponential reads the operators off the exponential of a block
/// bidiagonal generator (cheap for dense dipoles). Slope entries always use
/// the chain sum.
enum class PrepareMethod { Auto, ChainSum, BlockExponential };

struct PrepareOptions {
  bool with_slopes = false;
  PrepareMethod method = PrepareMethod::Auto;
  std::size_t memory_budget_bytes = std::size_t{1} << 30;
  unsigned threads = 0;
};

DysonCache prepare(const SystemModel& model, std::size_t order, double dt,
                   const PrepareOptions& options = {});

/// Throws FingerprintMismatch when the cache was not prepared for `model`.
void check_fingerprint(const DysonCache& cache, const SystemModel& model);

inline constexpr std::uint32_t kCacheFormatVersion = 1;

/// Binary cache file: "DYSN", version, header, entry table, CRC-32.
/// Written atomically (temporary file + rename).
void save_cache(const DysonCache& cache, const std::filesystem::path& path);

DysonCache load_cache(const std::filesystem::path& path);

/// Loads and verifies the fingerprint against `model`.
DysonCache load_cache(const std::filesystem::path& path, const SystemModel& model);

/// CRC-32 stored in the trailer of a cache or matrix file.
std::uint32_t stored_checksum(const std::filesystem::path& path);

/// Single-matrix file in the cache payload encoding ("DYSU").
void save_matrix(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace dysolve

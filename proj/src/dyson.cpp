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

#include "dysolve/dyson.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include <unsupported/Eigen/MatrixFunctions>

#include "dysolve/parallel.hpp"
#include "dysolve/weighting.hpp"

namespace dysolve {

namespace {

// Nonzero entries of one dipole, grouped by source (column) index.
using SparseColumns = std::vector<std::vector<std::pair<std::uint32_t, Complex>>>;

SparseColumns sparse_columns(const Matrix& x) {
  SparseColumns cols(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (x(r, k) != Complex{}) cols[static_cast<std::size_t>(k)].emplace_back(static_cast<std::uint32_t>(r), x(r, k));
    }
  }
  return cols;
}

struct Chain {
  std::array<std::uint32_t, kMaxTruncationOrder + 1> k{};
  Complex product;
};

// All index tuples k_0..k_m with a nonzero dipole chain for the given channels.
std::vector<Chain> enumerate_chains(const std::vector<SparseColumns>& sparse,
                                    std::span<const std::uint32_t> channels, std::size_t dim) {
  std::vector<Chain> out;
  const std::size_t m = channels.size();
  Chain cur;
  auto walk = [&](auto&& self, std::size_t depth) -> void {
    if (depth == m) {
      out.push_back(cur);
      return;
    }
    const Complex before = cur.product;
    for (const auto& [row, value] : sparse[channels[depth]][cur.k[depth]]) {
      cur.k[depth + 1] = row;
      cur.product = before * value;
      self(self, depth + 1);
    }
    cur.product = before;
  };
  for (std::size_t k0 = 0; k0 < dim; ++k0) {
    cur.k[0] = static_cast<std::uint32_t>(k0);
    cur.product = 1.0;
    walk(walk, 0);
  }
  return out;
}

void check_assignment(const SystemModel& model, const FrequencyAssignment& a) {
  if (a.signs.size() != a.channels.size()) {
    throw Error(ErrorKind::InvalidArgument, "assignment channels and signs differ in length");
  }
  if (a.order() > kMaxTruncationOrder) {
    throw Error(ErrorKind::UnsupportedOrder, "order " + std::to_string(a.order()) + " exceeds 4");
  }
  for (std::size_t p = 0; p < a.order(); ++p) {
    if (a.channels[p] >= model.num_channels()) throw Error(ErrorKind::IndexOutOfRange, "channel index out of range");
    if (a.signs[p] != 1 && a.signs[p] != -1) throw Error(ErrorKind::InvalidArgument, "signs must be +1 or -1");
  }
}

Complex order_prefactor(std::size_t m, double dt) {
  return std::pow(Complex(0.0, -0.5 * dt), static_cast<int>(m));
}

std::vector<double> carriers_of(const SystemModel& model) {
  std::vector<double> w;
  w.reserve(model.num_channels());
  for (const auto& ch : model.channels) w.push_back(ch.carrier);
  return w;
}

// Accumulates S (and optionally every slope operator) for one assignment over
// a precomputed chain list.
void accumulate(const SystemModel& model, const FrequencyAssignment& a, double dt,
                std::span<const Chain> chains, Matrix& s, std::vector<Matrix>* slopes) {
  const std::size_t n = model.dim();
  const std::size_t m = a.order();
  const auto carriers = carriers_of(model);
  const auto c = cumulative_vector(a, carriers);
  const Complex pref = order_prefactor(m, dt);
  s = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (slopes) {
    slopes->assign(m, Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  }
  std::array<double, kMaxTruncationOrder + 2> x{};
  std::array<Complex, kMaxTruncationOrder> partial{};
  for (const auto& chain : chains) {
    for (std::size_t j = 0; j <= m; ++j) x[j] = (model.eigenvalues[chain.k[j]] - c[j]) * dt;
    const Complex amp = pref * chain.product;
    const auto row = static_cast<Eigen::Index>(chain.k[m]);
    const auto col = static_cast<Eigen::Index>(chain.k[0]);
    s(row, col) += amp * weight(std::span<const double>(x.data(), m + 1));
    if (!slopes) continue;
    // -i d/dw[p] f = dt * sum_{j<=p} f(x with x_j repeated)
    Complex running = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      x[m + 1] = x[j];
      running += weight(std::span<const double>(x.data(), m + 2));
      partial[j] = running;
    }
    for (std::size_t p = 0; p < m; ++p) (*slopes)[p](row, col) += amp * dt * partial[p];
  }
}

// Exponential of the block lower-bidiagonal generator whose diagonal blocks
// are -i(lambda - c_j) dt and whose (j+1, j) blocks are the dipoles. Block
// (m, j) is the chain sum of the suffix starting at position j without the
// order prefactor.
Matrix block_exponential(const SystemModel& model, const FrequencyAssignment& a, double dt) {
  const auto n = static_cast<Eigen::Index>(model.dim());
  const std::size_t m = a.order();
  const auto c = cumulative_vector(a, model);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t j = 0; j <= m; ++j) {
    for (double lam : model.eigenvalues) {
      lo = std::min(lo, (lam - c[j]) * dt);
      hi = std::max(hi, (lam - c[j]) * dt);
    }
  }
  // A common node shift only rescales the result by a phase and keeps the
  // generator norm small.
  const double shift = 0.5 * (lo + hi);
  const auto size = static_cast<Eigen::Index>(m + 1) * n;
  Matrix b = Matrix::Zero(size, size);
  for (std::size_t j = 0; j <= m; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto r = static_cast<Eigen::Index>(j) * n + k;
      b(r, r) = Complex(0.0, -((model.eigenvalues[static_cast<std::size_t>(k)] - c[j]) * dt - shift));
    }
    if (j < m) {
      b.block(static_cast<Eigen::Index>(j + 1) * n, static_cast<Eigen::Index>(j) * n, n, n) =
          model.channels[a.channels[j]].dipole;
    }
  }
  Matrix e = b.exp();
  return e * std::exp(Complex(0.0, -shift));
}

// Rough operation counts deciding between the two preparation methods. One
// confluent-safe weight evaluation costs a few thousand flops.
bool block_exponential_is_cheaper(const std::vector<SparseColumns>& sparse, std::size_t n, std::size_t order) {
  const std::size_t q = sparse.size();
  double chain_cost = 0.0;
  std::vector<std::vector<double>> level{std::vector<double>(n, 1.0)};
  for (std::size_t m = 1; m <= order; ++m) {
    std::vector<std::vector<double>> next;
    for (const auto& counts : level) {
      for (std::size_t ch = 0; ch < q; ++ch) {
        std::vector<double> v(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
          for (const auto& entry : sparse[ch][k]) v[entry.first] += counts[k];
        }
        double total = 0.0;
        for (double x : v) total += x;
        chain_cost += total * static_cast<double>(std::size_t{1} << m) * 4000.0;
        next.push_back(std::move(v));
      }
    }
    level = std::move(next);
  }
  const double size = static_cast<double>((order + 1) * n);
  const double block_cost =
      std::pow(2.0 * static_cast<double>(q), static_cast<double>(order)) * 100.0 * size * size * size;
  return block_cost < chain_cost;
}

}  // namespace

std::vector<double> signed_frequencies(const FrequencyAssignment& a, std::span<const double> carriers) {
  std::vector<double> w(a.order());
  for (std::size_t p = 0; p < a.order(); ++p) w[p] = a.signs[p] * carriers[a.channels[p]];
  return w;
}

std::vector<double> cumulative_vector(const FrequencyAssignment& a, std::span<const double> carriers) {
  const auto w = signed_frequencies(a, carriers);
  std::vector<double> c(a.order() + 1, 0.0);
  for (std::size_t j = a.order(); j-- > 0;) c[j] = c[j + 1] + w[j];
  return c;
}

std::vector<double> cumulative_vector(const FrequencyAssignment& a, const SystemModel& model) {
  return cumulative_vector(a, carriers_of(model));
}

int plus_count(const FrequencyAssignment& a) {
  return static_cast<int>(std::count(a.signs.begin(), a.signs.end(), 1));
}

std::vector<int> plus_exponents(const FrequencyAssignment& a) {
  std::vector<int> mu(a.order());
  for (std::size_t p = 0; p < a.order(); ++p) mu[p] = a.signs[p] > 0 ? 1 : 0;
  return mu;
}

std::vector<FrequencyAssignment> enumerate_assignments(std::size_t order, std::size_t num_channels) {
  if (order > kMaxTruncationOrder) throw Error(ErrorKind::UnsupportedOrder, "truncation order above 4");
  std::vector<FrequencyAssignment> out;
  out.push_back({});
  for (std::size_t m = 1; m <= order; ++m) {
    std::size_t channel_tuples = 1;
    for (std::size_t p = 0; p < m; ++p) channel_tuples *= num_channels;
    for (std::size_t ct = 0; ct < channel_tuples; ++ct) {
      FrequencyAssignment a;
      a.channels.resize(m);
      for (std::size_t p = m, r = ct; p-- > 0; r /= num_channels) {
        a.channels[p] = static_cast<std::uint32_t>(r % num_channels);
      }
      // -1 sorts before +1, so counting with bit set meaning +1 is canonical.
      for (std::size_t bits = 0; bits < (std::size_t{1} << m); ++bits) {
        a.signs.assign(m, -1);
        for (std::size_t p = 0; p < m; ++p) {
          if (bits & (std::size_t{1} << (m - 1 - p))) a.signs[p] = 1;
        }
        out.push_back(a);
      }
    }
  }
  return out;
}

std::size_t expected_entry_count(std::size_t order, std::size_t num_channels) {
  std::size_t total = 0, term = 1;
  for (std::size_t m = 0; m <= order; ++m, term *= 2 * num_channels) total += term;
  return total;
}

std::size_t expected_slope_entry_count(std::size_t order, std::size_t num_channels) {
  std::size_t total = 0, term = 1;
  for (std::size_t m = 0; m <= order; ++m, term *= 2 * num_channels) total += m * term;
  return total;
}

Matrix build_dyson_operator(const SystemModel& model, const FrequencyAssignment& a, double dt) {
  check_assignment(model, a);
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "subpixel width must be positive");
  if (a.order() == 0) return drift_propagator(model, dt);
  std::vector<SparseColumns> sparse;
  for (const auto& ch : model.channels) sparse.push_back(sparse_columns(ch.dipole));
  const auto chains = enumerate_chains(sparse, a.channels, model.dim());
  Matrix s;
  accumulate(model, a, dt, chains, s, nullptr);
  return s;
}

Matrix build_slope_operator(const SystemModel& model, const FrequencyAssignment& a,
                            std::size_t position, double dt) {
  check_assignment(model, a);
  if (position >= a.order()) throw Error(ErrorKind::IndexOutOfRange, "slope position out of range");
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "subpixel width must be positive");
  std::vector<SparseColumns> sparse;
  for (const auto& ch : model.channels) sparse.push_back(sparse_columns(ch.dipole));
  const auto chains = enumerate_chains(sparse, a.channels, model.dim());
  Matrix s;
  std::vector<Matrix> slopes;
  accumulate(model, a, dt, chains, s, &slopes);
  return slopes[position];
}

DysonCache prepare(const SystemModel& model, std::size_t order, double dt, const PrepareOptions& options) {
  if (order > kMaxTruncationOrder) {
    throw Error(ErrorKind::UnsupportedOrder, "truncation order " + std::to_string(order) + " exceeds 4");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "subpixel width must be positive");
  const std::size_t n = model.dim();
  const std::size_t q = model.num_channels();
  for (const auto& ch : model.channels) {
    if (static_cast<std::size_t>(ch.dipole.rows()) != n || static_cast<std::size_t>(ch.dipole.cols()) != n) {
      throw Error(ErrorKind::DimensionMismatch, "dipole size does not match the drift");
    }
  }
  if (q == 0 && order > 0) throw Error(ErrorKind::InvalidArgument, "no drive channels");

  const std::size_t base_count = expected_entry_count(order, q);
  const std::size_t slope_count = options.with_slopes ? expected_slope_entry_count(order, q) : 0;
  const long double bytes = static_cast<long double>(base_count + slope_count) * n * n * sizeof(Complex);
  if (bytes > static_cast<long double>(options.memory_budget_bytes)) {
    throw Error(ErrorKind::CacheTooLarge, "cache needs " + std::to_string(static_cast<double>(bytes)) +
                                              " bytes, budget is " + std::to_string(options.memory_budget_bytes));
  }

  DysonCache cache;
  cache.truncation_order = order;
  cache.subpixel_width = dt;
  cache.dim = n;
  cache.carriers = carriers_of(model);
  cache.system_fingerprint = fingerprint(model);

  const auto assignments = enumerate_assignments(order, q);
  cache.entries.resize(assignments.size());
  std::vector<std::size_t> slope_offset(assignments.size(), 0);
  for (std::size_t i = 0, off = 0; i < assignments.size(); ++i) {
    cache.entries[i].assignment = assignments[i];
    slope_offset[i] = off;
    if (options.with_slopes) off += assignments[i].order();
  }
  if (options.with_slopes) {
    cache.slope_entries.resize(slope_count);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      for (std::size_t p = 0; p < assignments[i].order(); ++p) {
        auto& e = cache.slope_entries[slope_offset[i] + p];
        e.assignment = assignments[i];
        e.position = static_cast<std::uint32_t>(p);
      }
    }
  }
  cache.entries[0].op = drift_propagator(model, dt);

  std::vector<SparseColumns> sparse;
  for (const auto& ch : model.channels) sparse.push_back(sparse_columns(ch.dipole));

  // One task per channel tuple; its chains serve every sign pattern. Entries of
  // a tuple are contiguous in canonical order, starting at `first`.
  struct Task {
    std::size_t first;
    std::size_t count;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 1; i < assignments.size();) {
    const std::size_t patterns = std::size_t{1} << assignments[i].order();
    tasks.push_back({i, patterns});
    i += patterns;
  }

  const bool use_block =
      order > 0 && (options.method == PrepareMethod::BlockExponential ||
                    (options.method == PrepareMethod::Auto && !options.with_slopes &&
                     block_exponential_is_cheaper(sparse, n, order)));
  if (use_block && !options.with_slopes) tasks.clear();

  parallel_for(tasks.size(), options.threads, [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto chains = enumerate_chains(sparse, assignments[task.first].channels, n);
    std::vector<Matrix> slopes;
    for (std::size_t i = task.first; i < task.first + task.count; ++i) {
      accumulate(model, assignments[i], dt, chains, cache.entries[i].op, options.with_slopes ? &slopes : nullptr);
      if (!options.with_slopes) continue;
      for (std::size_t p = 0; p < slopes.size(); ++p) {
        cache.slope_entries[slope_offset[i] + p].op = std::move(slopes[p]);
      }
    }
  });
  if (use_block) {
    // Every lower-order assignment is the suffix of exactly one top-order
    // assignment whose prefix is all (channel 0, sign -1).
    std::vector<std::size_t> tops;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i].order() == order) tops.push_back(i);
    }
    parallel_for(tops.size(), options.threads, [&](std::size_t t) {
      const auto& a = assignments[tops[t]];
      const Matrix e = block_exponential(model, a, dt);
      const auto ni = static_cast<Eigen::Index>(n);
      for (std::size_t j = 0; j < order; ++j) {
        if (j > 0 && (a.channels[j - 1] != 0 || a.signs[j - 1] != -1)) break;
        FrequencyAssignment suffix;
        suffix.channels.assign(a.channels.begin() + static_cast<std::ptrdiff_t>(j), a.channels.end());
        suffix.signs.assign(a.signs.begin() + static_cast<std::ptrdiff_t>(j), a.signs.end());
        const auto it = std::lower_bound(assignments.begin(), assignments.end(), suffix);
        const auto idx = static_cast<std::size_t>(it - assignments.begin());
        cache.entries[idx].op = order_prefactor(order - j, dt) *
                                e.block(static_cast<Eigen::Index>(order) * ni, static_cast<Eigen::Index>(j) * ni, ni, ni);
      }
    });
  }
  return cache;
}

void check_fingerprint(const DysonCache& cache, const SystemModel& model) {
  if (cache.system_fingerprint != fingerprint(model) || cache.dim != model.dim()) {
    throw Error(ErrorKind::FingerprintMismatch, "cache was prepared for a different system");
  }
}

}  // namespace dysolve

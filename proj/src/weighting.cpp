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

#include "dysolve/weighting.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <vector>

#include <boost/multiprecision/cpp_complex.hpp>

namespace dysolve {

namespace {

constexpr std::size_t kMaxNodes = 16;
constexpr Complex kI{0.0, 1.0};

// Node sets whose distance from their centroid stays below this radius are
// summed directly from the simplex power series. Beyond it the recursion
// always divides by a node separation larger than the radius, so the
// difference quotients cannot lose more than a few digits.
constexpr double kSeriesRadius = 2.0;

void check_nodes(std::span<const Complex> nodes) {
  if (nodes.empty()) throw Error(ErrorKind::EmptyNodes, "weighting function needs at least one node");
  if (nodes.size() > kMaxNodes) {
    throw Error(ErrorKind::InvalidArgument, "at most 16 nodes are supported");
  }
  for (const auto& z : nodes) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw Error(ErrorKind::InvalidArgument, "non-finite node");
    }
  }
}

// f(x) = e^{-ic} sum_M (-i)^M h_M(x - c) / (M + n)!, with h_M the complete
// homogeneous symmetric polynomial and c the centroid. Exact for repeated
// nodes, so it also covers the confluent limit.
Complex series_weight(const Complex* x, std::size_t count) {
  const std::size_t n = count - 1;
  Complex centroid = 0.0;
  for (std::size_t j = 0; j < count; ++j) centroid += x[j];
  centroid /= static_cast<double>(count);

  std::array<Complex, kMaxNodes> y{};
  double radius = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    y[j] = x[j] - centroid;
    radius = std::max(radius, std::abs(y[j]));
  }

  double inv_fact = 1.0;  // 1/(M+n)!
  for (std::size_t k = 2; k <= n; ++k) inv_fact /= static_cast<double>(k);
  double n_fact_inv = inv_fact;

  std::array<Complex, kMaxNodes> h;
  h.fill(Complex{1.0, 0.0});
  Complex sum = inv_fact;
  Complex phase{1.0, 0.0};  // (-i)^M
  double bound = n_fact_inv;  // r^M / (M! n!) bounds |h_M| / (M+n)!
  for (std::size_t m = 1; m < 400; ++m) {
    Complex prev = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      h[j] = prev + y[j] * h[j];
      prev = h[j];
    }
    inv_fact /= static_cast<double>(m + n);
    phase *= -kI;
    sum += phase * h[n] * inv_fact;
    bound *= radius / static_cast<double>(m);
    if (static_cast<double>(m) > radius && bound <= 1e-18 * std::abs(sum)) break;
    if (bound < 1e-300) break;
  }
  return std::exp(-kI * centroid) * sum;
}

class SubsetEvaluator {
 public:
  explicit SubsetEvaluator(std::span<const Complex> nodes)
      : nodes_(nodes), memo_(std::size_t{1} << nodes.size()), known_(memo_.size(), 0) {}

  Complex eval(std::uint32_t mask) {
    if (known_[mask]) return memo_[mask];
    std::array<Complex, kMaxNodes> sub{};
    std::array<std::size_t, kMaxNodes> idx{};
    std::size_t count = 0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (mask & (1u << j)) {
        idx[count] = j;
        sub[count++] = nodes_[j];
      }
    }
    Complex value;
    if (count == 1) {
      value = std::exp(-kI * sub[0]);
    } else {
      Complex centroid = 0.0;
      for (std::size_t j = 0; j < count; ++j) centroid += sub[j];
      centroid /= static_cast<double>(count);
      double radius = 0.0;
      for (std::size_t j = 0; j < count; ++j) radius = std::max(radius, std::abs(sub[j] - centroid));
      if (radius <= kSeriesRadius) {
        value = series_weight(sub.data(), count);
      } else {
        // f is symmetric, so the two-term recursion may eliminate any pair;
        // take the most separated one.
        std::size_t a = 0, b = 1;
        double best = -1.0;
        for (std::size_t p = 0; p < count; ++p) {
          for (std::size_t q = p + 1; q < count; ++q) {
            const double d = std::abs(sub[p] - sub[q]);
            if (d > best) {
              best = d;
              a = p;
              b = q;
            }
          }
        }
        const std::uint32_t without_b = mask & ~(1u << idx[b]);
        const std::uint32_t without_a = mask & ~(1u << idx[a]);
        value = kI * (eval(without_b) - eval(without_a)) / (sub[a] - sub[b]);
      }
    }
    known_[mask] = 1;
    memo_[mask] = value;
    return value;
  }

 private:
  std::span<const Complex> nodes_;
  std::vector<Complex> memo_;
  std::vector<char> known_;
};

}  // namespace

Complex weight(std::span<const Complex> nodes) {
  check_nodes(nodes);
  if (nodes.size() == 1) return std::exp(-kI * nodes[0]);

  Complex centroid = 0.0;
  for (const auto& z : nodes) centroid += z;
  centroid /= static_cast<double>(nodes.size());
  double radius = 0.0;
  for (const auto& z : nodes) radius = std::max(radius, std::abs(z - centroid));
  if (radius <= kSeriesRadius) return series_weight(nodes.data(), nodes.size());

  SubsetEvaluator evaluator(nodes);
  return evaluator.eval(static_cast<std::uint32_t>((std::size_t{1} << nodes.size()) - 1));
}

Complex weight(std::span<const double> nodes) {
  std::array<Complex, kMaxNodes> z{};
  if (nodes.size() > kMaxNodes) throw Error(ErrorKind::InvalidArgument, "at most 16 nodes are supported");
  for (std::size_t j = 0; j < nodes.size(); ++j) z[j] = nodes[j];
  return weight(std::span<const Complex>(z.data(), nodes.size()));
}

std::pair<Complex, Complex> weight_shift_check(std::span<const Complex> nodes, Complex a) {
  check_nodes(nodes);
  std::vector<Complex> shifted(nodes.begin(), nodes.end());
  for (auto& z : shifted) z -= a;
  return {std::exp(kI * a) * weight(nodes), weight(shifted)};
}

Complex weight_derivative(std::span<const Complex> nodes, std::size_t j) {
  check_nodes(nodes);
  if (j >= nodes.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "node index " + std::to_string(j) + " out of range");
  }
  std::vector<Complex> extended(nodes.begin(), nodes.end());
  extended.push_back(nodes[j]);
  return -kI * weight(extended);
}

Complex divided_difference_reference(std::span<const Complex> nodes) {
  if (nodes.empty()) throw Error(ErrorKind::EmptyNodes, "divided difference needs at least one node");
  // Distinct double nodes differ by at least an ulp, so an order-4 table loses
  // at most ~60 digits to cancellation.
  using mp_complex = boost::multiprecision::cpp_complex_100;

  // Lexicographic order groups equal nodes so confluent blocks are contiguous.
  std::vector<Complex> x(nodes.begin(), nodes.end());
  std::sort(x.begin(), x.end(), [](const Complex& a, const Complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  const std::size_t n = x.size() - 1;
  const mp_complex minus_i(0, -1);

  std::vector<mp_complex> xs;
  std::vector<mp_complex> table;
  xs.reserve(x.size());
  table.reserve(x.size());
  for (const auto& z : x) {
    xs.emplace_back(z.real(), z.imag());
    table.push_back(exp(minus_i * xs.back()));
  }
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t i = 0; i + k <= n; ++i) {
      const std::size_t j = i + k;
      if (x[i] == x[j]) {
        // k-th derivative of exp(-ix) over k!
        mp_complex d = exp(minus_i * xs[i]);
        for (std::size_t p = 1; p <= k; ++p) d *= minus_i / mp_complex(static_cast<int>(p));
        table[i] = d;
      } else {
        table[i] = (table[i + 1] - table[i]) / (xs[j] - xs[i]);
      }
    }
  }
  mp_complex result = table[0];
  const mp_complex plus_i(0, 1);
  for (std::size_t k = 0; k < n; ++k) result *= plus_i;
  return {static_cast<double>(result.real()), static_cast<double>(result.imag())};
}

}  // namespace dysolve

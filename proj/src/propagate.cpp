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

#include "dysolve/propagate.hpp"

#include <cmath>

#include "dysolve/parallel.hpp"

namespace dysolve {

namespace {

using RowMajorMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double frequency_sum(const FrequencyAssignment& a, std::span<const double> carriers) {
  double w = 0.0;
  for (double x : signed_frequencies(a, carriers)) w += x;
  return w;
}

Complex amplitude(const SubpixelSequence& seq, std::size_t l, bool slope, bool conjugate) {
  const Complex v = slope ? seq.slope(l) : seq.level(l);
  return conjugate ? std::conj(v) : v;
}

}  // namespace

Complex coefficient(std::size_t l, const FrequencyAssignment& a, std::span<const SubpixelSequence> seqs,
                    std::span<const double> carriers) {
  const double dt = seqs.empty() ? 0.0 : seqs[0].subpixel_width;
  Complex c = std::polar(1.0, frequency_sum(a, carriers) * static_cast<double>(l) * dt);
  for (std::size_t p = 0; p < a.order(); ++p) c *= amplitude(seqs[a.channels[p]], l, false, a.signs[p] < 0);
  return c;
}

Complex slope_coefficient(std::size_t l, const FrequencyAssignment& a, std::size_t position,
                          std::span<const SubpixelSequence> seqs, std::span<const double> carriers) {
  const double dt = seqs.empty() ? 0.0 : seqs[0].subpixel_width;
  Complex c = std::polar(1.0, frequency_sum(a, carriers) * static_cast<double>(l) * dt);
  for (std::size_t p = 0; p < a.order(); ++p) {
    c *= amplitude(seqs[a.channels[p]], l, p == position, a.signs[p] < 0);
  }
  return c;
}

Contractor::Contractor(const DysonCache& cache)
    : dim_(cache.dim),
      order_(cache.truncation_order),
      dt_(cache.subpixel_width), uses_slopes_(cache.has_slopes()), carriers_(cache.carriers) {
  const std::size_t n2 = dim_ * dim_;
  const std::size_t k = cache.entries.size() + cache.slope_entries.size();
  ops_.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n2));
  std::size_t r = 0;
  auto add = [&](const FrequencyAssignment& a, const Matrix& op, std::ptrdiff_t slope_pos) {
    std::vector<Factor> f;
    for (std::size_t p = 0; p < a.order(); ++p) {
      f.push_back({a.channels[p], a.signs[p] < 0,
                   static_cast<std::ptrdiff_t>(p) == slope_pos ? AmplitudeKind::Slope : AmplitudeKind::Level});
    }
    factors_.push_back(std::move(f));
    frequency_sum_.push_back(frequency_sum(a, carriers_));
    ops_.row(static_cast<Eigen::Index>(r++)) =
        Eigen::Map<const Eigen::VectorXcd>(op.data(), static_cast<Eigen::Index>(n2)).transpose();
  };
  for (const auto& e : cache.entries) add(e.assignment, e.op, -1);
  for (const auto& e : cache.slope_entries) add(e.assignment, e.op, e.position);
}

void Contractor::check(std::span<const SubpixelSequence> seqs) const {
  if (seqs.size() != carriers_.size()) {
    throw Error(ErrorKind::LengthMismatch, "expected " + std::to_string(carriers_.size()) + " channel sequences, got " +
                                               std::to_string(seqs.size()));
  }
  if (seqs.empty()) return;
  const std::size_t p = seqs[0].size();
  if (p == 0) throw Error(ErrorKind::LengthMismatch, "empty subpixel sequence");
  for (const auto& s : seqs) {
    if (s.size() != p) throw Error(ErrorKind::LengthMismatch, "channel sequences differ in length");
    if (s.linear() && (s.intercepts.size() != p || s.slopes.size() != p)) {
      throw Error(ErrorKind::LengthMismatch, "intercepts/slopes length differs from values");
    }
    if (std::abs(s.subpixel_width - dt_) > 1e-12 * dt_) {
      throw Error(ErrorKind::InvalidArgument, "sequence subpixel width differs from the cache");
    }
    if (s.linear() && !uses_slopes_) {
      throw Error(ErrorKind::InvalidArgument, "linear interpolation needs a cache prepared with slopes");
    }
  }
}

Complex Contractor::factor_value(const Factor& f, std::span<const SubpixelSequence> seqs, std::size_t l) const {
  return amplitude(seqs[f.channel], l, f.kind == AmplitudeKind::Slope, f.conjugate);
}

Eigen::MatrixXcd Contractor::coefficients(std::span<const SubpixelSequence> seqs, std::size_t l0,
                                          std::size_t l1) const {
  Eigen::MatrixXcd c(static_cast<Eigen::Index>(l1 - l0), static_cast<Eigen::Index>(factors_.size()));
  for (std::size_t l = l0; l < l1; ++l) {
    const double t = static_cast<double>(l) * dt_;
    for (std::size_t r = 0; r < factors_.size(); ++r) {
      Complex v = std::polar(1.0, frequency_sum_[r] * t);
      for (const auto& f : factors_[r]) v *= factor_value(f, seqs, l);
      c(static_cast<Eigen::Index>(l - l0), static_cast<Eigen::Index>(r)) = v;
    }
  }
  return c;
}

Eigen::VectorXcd Contractor::coefficient_derivative(std::span<const SubpixelSequence> seqs, std::size_t l,
                                                    const AmplitudeVariable& v) const {
  Eigen::VectorXcd d = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(factors_.size()));
  const double t = static_cast<double>(l) * dt_;
  for (std::size_t r = 0; r < factors_.size(); ++r) {
    const auto& fs = factors_[r];
    Complex sum = 0.0;
    for (std::size_t p = 0; p < fs.size(); ++p) {
      if (fs[p].channel != v.channel || fs[p].kind != v.kind || fs[p].conjugate != v.conjugate) continue;
      Complex rest = 1.0;
      for (std::size_t j = 0; j < fs.size(); ++j) {
        if (j != p) rest *= factor_value(fs[j], seqs, l);
      }
      sum += rest;
    }
    if (sum != Complex{}) d(static_cast<Eigen::Index>(r)) = std::polar(1.0, frequency_sum_[r] * t) * sum;
  }
  return d;
}

std::vector<Matrix> Contractor::steps(std::span<const SubpixelSequence> seqs, std::size_t l0, std::size_t l1) const {
  const RowMajorMatrix flat = coefficients(seqs, l0, l1) * ops_;
  const auto n = static_cast<Eigen::Index>(dim_);
  std::vector<Matrix> out;
  out.reserve(l1 - l0);
  for (Eigen::Index i = 0; i < flat.rows(); ++i) out.emplace_back(Eigen::Map<const Matrix>(flat.row(i).data(), n, n));
  return out;
}

Matrix Contractor::combine(const Eigen::VectorXcd& w) const {
  const Eigen::RowVectorXcd flat = w.transpose() * ops_;
  const auto n = static_cast<Eigen::Index>(dim_);
  return Eigen::Map<const Matrix>(flat.data(), n, n);
}

Eigen::VectorXcd Contractor::traces(const Matrix& m) const {
  const Matrix mt = m.transpose();
  return ops_ * Eigen::Map<const Eigen::VectorXcd>(mt.data(), mt.size());
}

std::vector<Matrix> step_unitaries(const DysonCache& cache, std::span<const SubpixelSequence> seqs,
                                   unsigned threads) {
  const Contractor contractor(cache);
  contractor.check(seqs);
  const std::size_t p = seqs.empty() ? 0 : seqs[0].size();
  constexpr std::size_t kBlock = 512;
  const std::size_t blocks = (p + kBlock - 1) / kBlock;
  std::vector<Matrix> out(p);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t l0 = b * kBlock;
    const std::size_t l1 = std::min(p, l0 + kBlock);
    auto block = contractor.steps(seqs, l0, l1);
    for (std::size_t i = 0; i < block.size(); ++i) out[l0 + i] = std::move(block[i]);
  });
  return out;
}

Matrix total_propagator(std::span<const Matrix> steps, unsigned threads) {
  if (steps.empty()) throw Error(ErrorKind::InvalidArgument, "no steps to multiply");
  const auto n = steps[0].rows();
  for (const auto& s : steps) {
    if (s.rows() != n || s.cols() != n) throw Error(ErrorKind::DimensionMismatch, "steps differ in size");
  }
  std::vector<Matrix> level(steps.begin(), steps.end());
  while (level.size() > 1) {
    const std::size_t pairs = level.size() / 2;
    std::vector<Matrix> next((level.size() + 1) / 2);
    parallel_for(pairs, threads, [&](std::size_t i) { next[i] = level[2 * i + 1] * level[2 * i]; });
    if (level.size() % 2 == 1) next.back() = std::move(level.back());
    level = std::move(next);
  }
  return std::move(level[0]);
}

PropagatorResult propagate(const DysonCache& cache, std::span<const SubpixelSequence> seqs,
                           const ContractionOptions& options) {
  return propagate(Contractor(cache), seqs, options);
}

PropagatorResult propagate(const Contractor& contractor, std::span<const SubpixelSequence> seqs,
                           const ContractionOptions& options) {
  contractor.check(seqs);
  const std::size_t p = seqs.empty() ? 0 : seqs[0].size();
  if (p == 0) throw Error(ErrorKind::LengthMismatch, "no subpixels to propagate");
  const std::size_t block = std::max<std::size_t>(1, options.block_size);
  const std::size_t blocks = (p + block - 1) / block;

  PropagatorResult result;
  result.order = contractor.order();
  result.subpixel_width = contractor.subpixel_width();
  result.num_subpixels = p;
  if (options.retain_steps) result.steps.resize(p);

  std::vector<Matrix> partial(blocks);
  parallel_for(blocks, options.threads, [&](std::size_t b) {
    const std::size_t l0 = b * block;
    const std::size_t l1 = std::min(p, l0 + block);
    auto steps = contractor.steps(seqs, l0, l1);
    partial[b] = total_propagator(steps, 1);
    if (options.retain_steps) {
      for (std::size_t i = 0; i < steps.size(); ++i) result.steps[l0 + i] = std::move(steps[i]);
    }
  });
  result.total = total_propagator(partial, options.threads);
  for (const auto& m : result.total.reshaped()) {
    if (!std::isfinite(m.real()) || !std::isfinite(m.imag())) {
      throw Error(ErrorKind::NonFiniteResult, "non-finite propagator entry");
    }
  }
  return result;
}

std::pair<Matrix, Matrix> propagator_derivative(const DysonCache& cache, std::span<const SubpixelSequence> seqs,
                                                std::size_t l, std::span<const Matrix> steps,
                                                std::uint32_t channel) {
  const Contractor contractor(cache);
  contractor.check(seqs);
  if (l >= steps.size()) throw Error(ErrorKind::IndexOutOfRange, "subpixel index out of range");
  if (channel >= contractor.num_channels()) throw Error(ErrorKind::IndexOutOfRange, "channel out of range");
  const auto n = static_cast<Eigen::Index>(cache.dim);
  Matrix before = Matrix::Identity(n, n);
  for (std::size_t p = 0; p < l; ++p) before = steps[p] * before;
  Matrix after = Matrix::Identity(n, n);
  for (std::size_t p = l + 1; p < steps.size(); ++p) after = steps[p] * after;
  auto derivative = [&](bool conjugate) {
    const Matrix d = contractor.combine(
        contractor.coefficient_derivative(seqs, l, {channel, AmplitudeKind::Level, conjugate}));
    return Matrix(after * d * before);
  };
  return {derivative(false), derivative(true)};
}

}  // namespace dysolve

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

#include "dysolve/models.hpp"

#include <algorithm>
#include <cmath>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <unsupported/Eigen/KroneckerProduct>

namespace dysolve {

namespace {

constexpr double kCutoffTolerance = 1e-8;
constexpr double kHybridizationMargin = 0.01;

struct RawTransmon {
  Eigen::VectorXd eigenvalues;
  RealMatrix vectors;
};

RawTransmon diagonalize_transmon(double e_c, double e_j, std::size_t n_max) {
  const auto size = static_cast<Eigen::Index>(2 * n_max + 1);
  RealMatrix h = RealMatrix::Zero(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const double k = static_cast<double>(i) - static_cast<double>(n_max);
    h(i, i) = 4.0 * e_c * k * k;
    if (i + 1 < size) h(i, i + 1) = h(i + 1, i) = -0.5 * e_j;
  }
  const Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
  return {es.eigenvalues(), es.eigenvectors()};
}

// Sign fixed by making the first non-negligible component positive.
void fix_gauge(RealMatrix& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double scale = v.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      if (std::abs(v(r, c)) > 1e-8 * scale) {
        if (v(r, c) < 0.0) v.col(c) *= -1.0;
        break;
      }
    }
  }
}

}  // namespace

TransmonLevels build_transmon(const TransmonSpec& spec) {
  if (!(spec.e_c > 0.0) || !(spec.e_j >= 0.0) || !std::isfinite(spec.e_c) || !std::isfinite(spec.e_j)) {
    throw Error(ErrorKind::InvalidArgument, "transmon needs E_C > 0 and E_J >= 0");
  }
  if (spec.keep_levels < 1 || spec.keep_levels > 2 * spec.charge_cutoff + 1) {
    throw Error(ErrorKind::InvalidArgument, "keep_levels must lie in [1, 2 n_max + 1]");
  }
  auto raw = diagonalize_transmon(spec.e_c, spec.e_j, spec.charge_cutoff);
  const auto keep = static_cast<Eigen::Index>(spec.keep_levels);

  const auto wider = diagonalize_transmon(spec.e_c, spec.e_j, spec.charge_cutoff + 5);
  for (Eigen::Index i = 0; i < keep; ++i) {
    const double a = raw.eigenvalues(i) - raw.eigenvalues(0);
    const double b = wider.eigenvalues(i) - wider.eigenvalues(0);
    if (std::abs(a - b) > kCutoffTolerance) {
      throw Error(ErrorKind::CutoffTooSmall, "level " + std::to_string(i) + " moves by " +
                                                 std::to_string(std::abs(a - b)) + " rad/ns when the cutoff grows");
    }
  }

  RealMatrix v = raw.vectors.leftCols(keep);
  fix_gauge(v);
  Eigen::VectorXd n_diag(raw.vectors.rows());
  for (Eigen::Index i = 0; i < n_diag.size(); ++i) {
    n_diag(i) = static_cast<double>(i) - static_cast<double>(spec.charge_cutoff);
  }
  TransmonLevels out;
  for (Eigen::Index i = 0; i < keep; ++i) out.eigenvalues.push_back(raw.eigenvalues(i) - raw.eigenvalues(0));
  const RealMatrix charge = v.transpose() * n_diag.asDiagonal() * v;
  out.charge = charge.cast<Complex>();
  return out;
}

TransmonSpec calibrate_transmon(double omega01, double alpha, std::size_t charge_cutoff, std::size_t keep_levels) {
  if (!(alpha < 0.0) || !(std::abs(alpha) < omega01)) {
    throw Error(ErrorKind::InvalidArgument, "calibration needs alpha < 0 and |alpha| < omega01");
  }
  const double tol = ghz_to_angular(1e-7);
  TransmonSpec spec{-alpha, 0.0, charge_cutoff, std::max<std::size_t>(keep_levels, 3)};
  spec.e_j = (omega01 + spec.e_c) * (omega01 + spec.e_c) / (8.0 * spec.e_c);

  auto residual = [&](double ec, double ej) {
    TransmonSpec s = spec;
    s.e_c = ec;
    s.e_j = ej;
    const auto levels = build_transmon(s);
    return Eigen::Vector2d(levels.omega01() - omega01, levels.anharmonicity() - alpha);
  };

  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::Vector2d f = residual(spec.e_c, spec.e_j);
    if (f.cwiseAbs().maxCoeff() < tol) {
      spec.keep_levels = keep_levels;
      return spec;
    }
    const double hc = 1e-6 * spec.e_c;
    const double hj = 1e-6 * spec.e_j;
    Eigen::Matrix2d jac;
    jac.col(0) = (residual(spec.e_c + hc, spec.e_j) - residual(spec.e_c - hc, spec.e_j)) / (2.0 * hc);
    jac.col(1) = (residual(spec.e_c, spec.e_j + hj) - residual(spec.e_c, spec.e_j - hj)) / (2.0 * hj);
    Eigen::Vector2d step = jac.fullPivLu().solve(-f);
    // Damp steps that would leave the physical region.
    while (spec.e_c + step(0) <= 0.0 || spec.e_j + step(1) <= 0.0) step *= 0.5;
    spec.e_c += step(0);
    spec.e_j += step(1);
  }
  throw Error(ErrorKind::NoConvergence, "transmon calibration did not converge in 100 iterations");
}

CrossResonanceSystem build_cross_resonance(const CoupledSpec& spec) {
  if (spec.g == 0.0 || !std::isfinite(spec.g)) throw Error(ErrorKind::InvalidArgument, "coupling g must be nonzero");
  const std::size_t levels = spec.levels_per_qubit;
  if (levels < 2) throw Error(ErrorKind::InvalidArgument, "need at least two levels per qubit");
  TransmonSpec cs = spec.control, ts = spec.target;
  cs.keep_levels = ts.keep_levels = levels;
  const auto control = build_transmon(cs);
  const auto target = build_transmon(ts);

  const auto l = static_cast<Eigen::Index>(levels);
  const auto n = l * l;
  const Matrix id = Matrix::Identity(l, l);
  Eigen::VectorXd ec(l), et(l);
  for (Eigen::Index i = 0; i < l; ++i) {
    ec(i) = control.eigenvalues[static_cast<std::size_t>(i)];
    et(i) = target.eigenvalues[static_cast<std::size_t>(i)];
  }
  const Matrix nc = Eigen::kroneckerProduct(control.charge, id);
  const Matrix nt = Eigen::kroneckerProduct(id, target.charge);
  RealMatrix h = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) h(i * l + j, i * l + j) = ec(i) + et(j);
  }
  h += spec.g * (nc * nt).real();

  const Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
  RealMatrix v = es.eigenvectors();

  // Dressed state k is labelled by the bare state it overlaps most.
  CrossResonanceSystem out;
  out.labels.resize(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> dressed_of_bare(static_cast<std::size_t>(n), -1);
  double margin = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index best = 0;
    v.col(k).cwiseAbs2().maxCoeff(&best);
    if (v(best, k) < 0.0) v.col(k) *= -1.0;
    out.labels[static_cast<std::size_t>(k)] = {static_cast<std::size_t>(best / l), static_cast<std::size_t>(best % l)};
    dressed_of_bare[static_cast<std::size_t>(best)] = k;
  }
  // The computational states must be claimed unambiguously.
  std::vector<std::size_t> subspace;
  for (Eigen::Index bare : {Eigen::Index{0}, Eigen::Index{1}, l, l + 1}) {
    const Eigen::VectorXd overlaps = v.row(bare).cwiseAbs2().transpose();
    Eigen::Index best = 0;
    const double top = overlaps.maxCoeff(&best);
    double second = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != best) second = std::max(second, overlaps(k));
    }
    margin = std::min(margin, top - second);
    if (top - second < kHybridizationMargin || dressed_of_bare[static_cast<std::size_t>(bare)] != best) {
      throw Error(ErrorKind::HybridizationAmbiguity,
                  "bare state (" + std::to_string(bare / l) + "," + std::to_string(bare % l) +
                      ") has no unique dressed partner (overlap margin " + std::to_string(top - second) + ")");
    }
    subspace.push_back(static_cast<std::size_t>(best));
  }
  out.min_overlap_margin = margin;

  const double ground = es.eigenvalues()(0);
  for (Eigen::Index k = 0; k < n; ++k) out.model.eigenvalues.push_back(es.eigenvalues()(k) - ground);
  const Matrix vc = v.cast<Complex>();
  out.target_frequency = out.model.eigenvalues[subspace[1]] - out.model.eigenvalues[subspace[0]];
  for (const Matrix* op : {&nc, &nt}) {
    Matrix x = vc.adjoint() * (*op) * vc;
    x = 0.5 * (x + x.adjoint()).eval();
    out.model.channels.push_back({x, out.target_frequency});
  }
  out.target.target = named_gate("ZX90");
  out.target.subspace = subspace;
  return out;
}

CoupledSpec default_cross_resonance_spec(double target_ghz) {
  CoupledSpec spec;
  spec.control = calibrate_transmon(ghz_to_angular(5.1), ghz_to_angular(-0.355));
  spec.target = calibrate_transmon(ghz_to_angular(target_ghz), ghz_to_angular(-0.352));
  spec.g = mhz_to_angular(4.29);
  spec.levels_per_qubit = 5;
  return spec;
}

BenchmarkInstance build_benchmark_ensemble(const BenchmarkEnsembleSpec& spec) {
  if (spec.num_drives < 1 || spec.num_drives > 3) throw Error(ErrorKind::InvalidArgument, "num_drives must be 1..3");
  if (spec.dim < 2 * spec.num_drives || spec.dim < 2) {
    throw Error(ErrorKind::InvalidArgument, "dimension too small for the requested drives");
  }
  if (!(spec.duration_ns > 0.0) || !(spec.pixel_width_ns > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "duration and pixel width must be positive");
  }
  if (!(spec.offresonant_fill >= 0.0 && spec.offresonant_fill <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "fill fraction must lie in [0, 1]");
  }
  boost::random::mt19937_64 rng(spec.seed);
  boost::random::normal_distribution<double> eig(spec.eigenvalue_mean_ghz, spec.eigenvalue_std_ghz);
  boost::random::normal_distribution<double> off(0.0, spec.offresonant_std);
  boost::random::normal_distribution<double> amp(spec.amplitude_mean_mhz, spec.amplitude_std_mhz);
  boost::random::uniform_01<double> unit;

  BenchmarkInstance out;
  std::vector<double> ghz(spec.dim);
  for (auto& e : ghz) e = eig(rng);
  std::sort(ghz.begin(), ghz.end());
  for (double e : ghz) out.model.eigenvalues.push_back(ghz_to_angular(e));

  const auto n = static_cast<Eigen::Index>(spec.dim);
  for (std::size_t d = 0; d < spec.num_drives; ++d) {
    const auto lo = static_cast<Eigen::Index>(2 * d);
    Matrix upper = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (i == lo && j == lo + 1) {
          upper(i, j) = 1.0;
          continue;
        }
        if (unit(rng) < spec.offresonant_fill) {
          const double re = off(rng);
          const double im = off(rng);
          upper(i, j) = {re, im};
        }
      }
    }
    const double carrier = out.model.eigenvalues[2 * d + 1] - out.model.eigenvalues[2 * d];
    out.model.channels.push_back({Matrix(upper + upper.adjoint()), carrier});
  }

  const auto pixels = static_cast<std::size_t>(std::llround(spec.duration_ns / spec.pixel_width_ns));
  for (std::size_t d = 0; d < spec.num_drives; ++d) {
    PulseSpec p;
    p.pixel_width = spec.pixel_width_ns;
    p.subpixels_per_pixel = spec.subpixels_per_pixel;
    p.filter_bandwidth = spec.filter_bandwidth;
    p.pixels.resize(pixels);
    for (auto& u : p.pixels) u = mhz_to_angular(amp(rng));
    out.pulses.push_back(std::move(p));
  }
  return out;
}

}  // namespace dysolve

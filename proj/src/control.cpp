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

#include "dysolve/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "dysolve/parallel.hpp"
#include "simplex_search.hpp"

namespace dysolve {

namespace {

Matrix subspace_block(const Matrix& u, const GateTarget& target) {
  const auto d = static_cast<Eigen::Index>(target.dim());
  Matrix b(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      b(i, j) = u(static_cast<Eigen::Index>(target.subspace[static_cast<std::size_t>(i)]),
                  static_cast<Eigen::Index>(target.subspace[static_cast<std::size_t>(j)]));
    }
    if (!target.frame_phases.empty()) b.row(i) *= std::polar(1.0, target.frame_phases[static_cast<std::size_t>(i)]);
  }
  return b;
}

// Q with Tr(Q U) = Tr(U_target^dagger F B).
Matrix overlap_operator(const GateTarget& target, std::size_t n) {
  const auto dim = static_cast<Eigen::Index>(n);
  Matrix q = Matrix::Zero(dim, dim);
  const std::size_t d = target.dim();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      Complex v = std::conj(target.target(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
      if (!target.frame_phases.empty()) v *= std::polar(1.0, target.frame_phases[j]);
      q(static_cast<Eigen::Index>(target.subspace[i]), static_cast<Eigen::Index>(target.subspace[j])) = v;
    }
  }
  return q;
}

Matrix rz(double theta) {
  Matrix r = Matrix::Zero(2, 2);
  r(0, 0) = std::polar(1.0, -0.5 * theta);
  r(1, 1) = std::polar(1.0, 0.5 * theta);
  return r;
}

Matrix local_z(std::span<const double> angles) {
  Matrix out = Matrix::Identity(1, 1);
  for (double a : angles) out = Eigen::kroneckerProduct(out, rz(a)).eval();
  return out;
}

}  // namespace

void validate(const GateTarget& target, std::size_t system_dim) {
  const auto d = static_cast<Eigen::Index>(target.dim());
  if (d == 0) throw Error(ErrorKind::InvalidArgument, "empty target subspace");
  if (target.target.rows() != d || target.target.cols() != d) {
    throw Error(ErrorKind::DimensionMismatch, "target size does not match the subspace");
  }
  if (unitarity_defect(target.target) > 1e-10) throw Error(ErrorKind::InvalidArgument, "target is not unitary");
  if (!target.frame_phases.empty() && target.frame_phases.size() != target.dim()) {
    throw Error(ErrorKind::LengthMismatch, "frame phases must match the subspace");
  }
  std::vector<std::size_t> sorted = target.subspace;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorKind::InvalidArgument, "subspace indices must be distinct");
  }
  if (sorted.back() >= system_dim) throw Error(ErrorKind::IndexOutOfRange, "subspace index out of range");
}

std::vector<double> drift_frame_phases(const SystemModel& model, const std::vector<std::size_t>& subspace,
                                       double duration) {
  std::vector<double> phases;
  for (std::size_t k : subspace) {
    if (k >= model.dim()) throw Error(ErrorKind::IndexOutOfRange, "subspace index out of range");
    phases.push_back(model.eigenvalues[k] * duration);
  }
  return phases;
}

Complex gate_overlap(const Matrix& u, const GateTarget& target) {
  validate(target, static_cast<std::size_t>(u.rows()));
  return (target.target.adjoint() * subspace_block(u, target)).trace();
}

double fidelity(const Matrix& u, const GateTarget& target) {
  const double d = static_cast<double>(target.dim());
  return std::norm(gate_overlap(u, target)) / (d * d);
}

Matrix named_gate(const std::string& name) {
  const Complex i1(0.0, 1.0);
  Matrix x(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  const double c = std::cos(std::numbers::pi / 4);
  if (name == "X90") return Matrix(c * Matrix::Identity(2, 2) - i1 * c * x);
  if (name == "X") return x;
  if (name == "I" || name == "identity") return Matrix::Identity(2, 2);
  if (name == "ZX90") {
    const Matrix zx = Eigen::kroneckerProduct(z, x);
    return Matrix(c * Matrix::Identity(4, 4) - i1 * c * zx);
  }
  if (name == "CNOT") {
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
    return m;
  }
  throw Error(ErrorKind::ConfigError, "unknown gate '" + name + "'");
}

GateTarget local_z_corrected_target(const Matrix& u, const GateTarget& target) {
  const std::size_t d = target.dim();
  std::size_t qubits = 0;
  while ((std::size_t{1} << qubits) < d) ++qubits;
  if ((std::size_t{1} << qubits) != d) throw Error(ErrorKind::InvalidArgument, "subspace is not a qubit register");
  const Matrix b = subspace_block(u, target);
  const Matrix td = target.target.adjoint();
  const double dd = static_cast<double>(d * d);
  auto objective = [&](const std::vector<double>& a) {
    const std::span<const double> angles(a);
    const Matrix pre = local_z(angles.subspan(0, qubits));
    const Matrix post = local_z(angles.subspan(qubits, qubits));
    return -std::norm((td * post * b * pre).trace()) / dd;
  };
  // A few starts on the torus of Z angles; the landscape is smooth but not
  // unimodal.
  std::vector<double> best_angles(2 * qubits, 0.0);
  double best_value = objective(best_angles);
  for (std::size_t start = 0; start < 4; ++start) {
    std::vector<double> x0(2 * qubits, 0.0);
    for (std::size_t k = 0; k < x0.size(); ++k) x0[k] = 0.5 * std::numbers::pi * static_cast<double>((start + k) % 4);
    const auto r = detail::nelder_mead(objective, x0, 0.3, 1e-10, 4000);
    if (r.value < best_value) {
      best_value = r.value;
      best_angles = r.x;
    }
  }
  const std::span<const double> angles(best_angles);
  GateTarget corrected = target;
  corrected.target = local_z(angles.subspan(qubits, qubits)).adjoint() * target.target *
                     local_z(angles.subspan(0, qubits)).adjoint();
  return corrected;
}

double local_z_corrected_fidelity(const Matrix& u, const GateTarget& target) {
  return fidelity(u, local_z_corrected_target(u, target));
}

double GradientReport::max_abs() const {
  double m = 0.0;
  for (const auto& g : grad_x) m = std::max(m, g.cwiseAbs().maxCoeff());
  for (const auto& g : grad_y) m = std::max(m, g.cwiseAbs().maxCoeff());
  return m;
}

double GradientReport::norm() const {
  double s = 0.0;
  for (const auto& g : grad_x) s += g.squaredNorm();
  for (const auto& g : grad_y) s += g.squaredNorm();
  return std::sqrt(s);
}

FidelityObjective::FidelityObjective(const DysonCache& cache, std::vector<PulseSpec> specs, GateTarget target,
                                     ObjectiveOptions options)
    : contractor_(cache), specs_(std::move(specs)), target_(std::move(target)), options_(options) {
  if (specs_.size() != contractor_.num_channels()) {
    throw Error(ErrorKind::LengthMismatch, "need one pulse per drive channel");
  }
  validate(target_, cache.dim);
  for (const auto& spec : specs_) {
    validate(spec);
    if (spec.num_subpixels() != specs_[0].num_subpixels()) {
      throw Error(ErrorKind::LengthMismatch, "channels differ in subpixel count");
    }
    if (std::abs(spec.subpixel_width() - cache.subpixel_width) > 1e-12 * cache.subpixel_width) {
      throw Error(ErrorKind::InvalidArgument, "pulse subpixel width differs from the cache");
    }
    if (spec.interpolation == Interpolation::Linear && !cache.has_slopes()) {
      throw Error(ErrorKind::InvalidArgument, "linear interpolation needs a cache prepared with slopes");
    }
    maps_.push_back(pulse_maps(spec));
  }
  chain_maps_ = maps_;
  num_subpixels_ = specs_[0].num_subpixels();
  subpixel_width_ = cache.subpixel_width;
}

void FidelityObjective::override_chain_maps(std::vector<PulseMaps> maps) {
  if (maps.size() != maps_.size()) throw Error(ErrorKind::LengthMismatch, "one map set per channel");
  chain_maps_ = std::move(maps);
}

void FidelityObjective::check_pixels(const PixelSet& pixels) const {
  if (pixels.size() != specs_.size()) throw Error(ErrorKind::LengthMismatch, "one pixel vector per channel");
  for (std::size_t c = 0; c < pixels.size(); ++c) {
    if (pixels[c].size() != specs_[c].num_pixels()) throw Error(ErrorKind::LengthMismatch, "pixel count mismatch");
  }
}

std::vector<SubpixelSequence> FidelityObjective::sequences(const PixelSet& pixels) const {
  check_pixels(pixels);
  std::vector<SubpixelSequence> seqs;
  for (std::size_t c = 0; c < pixels.size(); ++c) seqs.push_back(apply_maps(maps_[c], pixels[c], subpixel_width_));
  return seqs;
}

Matrix FidelityObjective::propagator(const PixelSet& pixels) const {
  ContractionOptions opts;
  opts.threads = options_.threads;
  return propagate(contractor_, sequences(pixels), opts).total;
}

double FidelityObjective::fidelity(const PixelSet& pixels) const {
  return dysolve::fidelity(propagator(pixels), target_);
}

GradientReport FidelityObjective::evaluate(const PixelSet& pixels) const {
  const auto seqs = sequences(pixels);
  contractor_.check(seqs);
  const std::size_t p = num_subpixels_;
  const std::size_t n = contractor_.dim();
  const std::size_t q = specs_.size();
  const auto dim = static_cast<Eigen::Index>(n);
  const bool linear = contractor_.uses_slopes() && seqs[0].linear();
  const Matrix qop = overlap_operator(target_, n);

  // Each retained subpixel holds a step, a backward product and a forward
  // product.
  const std::size_t block = std::clamp<std::size_t>(options_.memory_budget_entries / (3 * n * n), 1, p);
  const std::size_t blocks = (p + block - 1) / block;

  // Backward products L_l = Q U_{P-1} ... U_{l+1}; checkpoint[b] is L at the
  // last subpixel of block b.
  std::vector<Matrix> checkpoint(blocks);
  std::vector<Matrix> cached_steps;
  checkpoint[blocks - 1] = qop;
  for (std::size_t b = blocks; b-- > 1;) {
    const std::size_t l0 = b * block;
    const std::size_t l1 = std::min(p, l0 + block);
    const auto steps = contractor_.steps(seqs, l0, l1);
    Matrix l = checkpoint[b];
    for (std::size_t i = steps.size(); i-- > 0;) l = l * steps[i];
    checkpoint[b - 1] = std::move(l);
  }

  // dz/dv per channel and subpixel for s, s*, b, b*.
  const std::size_t kinds = linear ? 4 : 2;
  std::vector<std::vector<Eigen::VectorXcd>> dz(q, std::vector<Eigen::VectorXcd>(kinds, Eigen::VectorXcd(p)));
  Matrix pre = Matrix::Identity(dim, dim);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t l0 = b * block;
    const std::size_t l1 = std::min(p, l0 + block);
    const auto steps = contractor_.steps(seqs, l0, l1);
    const std::size_t len = steps.size();
    std::vector<Matrix> back(len);
    back[len - 1] = checkpoint[b];
    for (std::size_t i = len - 1; i-- > 0;) back[i] = back[i + 1] * steps[i + 1];
    std::vector<Matrix> fwd(len);  // product of all steps before l
    fwd[0] = pre;
    for (std::size_t i = 1; i < len; ++i) fwd[i] = steps[i - 1] * fwd[i - 1];
    pre = steps[len - 1] * fwd[len - 1];

    parallel_for(len, options_.threads, [&](std::size_t i) {
      const std::size_t l = l0 + i;
      const Eigen::VectorXcd tr = contractor_.traces(fwd[i] * back[i]);
      for (std::size_t c = 0; c < q; ++c) {
        for (std::size_t k = 0; k < kinds; ++k) {
          const AmplitudeVariable v{static_cast<std::uint32_t>(c), k < 2 ? AmplitudeKind::Level : AmplitudeKind::Slope,
                                    k % 2 == 1};
          dz[c][k](static_cast<Eigen::Index>(l)) = contractor_.coefficient_derivative(seqs, l, v).transpose() * tr;
        }
      }
    });
  }

  const Complex z = (qop * pre).trace();
  const double d2 = static_cast<double>(target_.dim() * target_.dim());
  GradientReport report;
  report.fidelity = std::norm(z) / d2;
  for (std::size_t c = 0; c < q; ++c) {
    auto dphi = [&](std::size_t k) -> Eigen::VectorXcd {
      return (std::conj(z) * dz[c][k] + z * dz[c][k + 1].conjugate()) / d2;
    };
    const auto& maps = chain_maps_[c];
    Eigen::VectorXcd du;
    if (linear) {
      const Eigen::VectorXcd da = dphi(0);
      const Eigen::VectorXcd db = dphi(2);
      du = maps.intercepts.transpose().cast<Complex>() * da + maps.slopes.transpose().cast<Complex>() * db;
    } else {
      du = maps.values.transpose().cast<Complex>() * dphi(0);
    }
    report.grad_x.push_back(2.0 * du.real());
    report.grad_y.push_back(-2.0 * du.imag());
  }
  return report;
}

GradientReport finite_difference_gradient(const FidelityObjective& objective, const PixelSet& pixels, double step) {
  GradientReport report;
  report.fidelity = objective.fidelity(pixels);
  PixelSet work = pixels;
  for (std::size_t c = 0; c < pixels.size(); ++c) {
    const auto np = static_cast<Eigen::Index>(pixels[c].size());
    Eigen::VectorXd gx(np), gy(np);
    for (Eigen::Index j = 0; j < np; ++j) {
      auto& u = work[c][static_cast<std::size_t>(j)];
      const Complex orig = u;
      for (int quad = 0; quad < 2; ++quad) {
        const Complex h = quad == 0 ? Complex(step, 0.0) : Complex(0.0, step);
        u = orig + h;
        const double plus = objective.fidelity(work);
        u = orig - h;
        const double minus = objective.fidelity(work);
        (quad == 0 ? gx : gy)(j) = (plus - minus) / (2.0 * step);
      }
      u = orig;
    }
    report.grad_x.push_back(gx);
    report.grad_y.push_back(gy);
  }
  return report;
}

double gradient_relative_error(const GradientReport& analytic, const GradientReport& reference, double floor) {
  if (analytic.grad_x.size() != reference.grad_x.size()) throw Error(ErrorKind::LengthMismatch, "channel count");
  const double scale = std::max(reference.max_abs(), floor);
  double worst = 0.0;
  for (std::size_t c = 0; c < analytic.grad_x.size(); ++c) {
    worst = std::max(worst, (analytic.grad_x[c] - reference.grad_x[c]).cwiseAbs().maxCoeff());
    worst = std::max(worst, (analytic.grad_y[c] - reference.grad_y[c]).cwiseAbs().maxCoeff());
  }
  return worst / scale;
}

PixelSet flat_pixels(const FidelityObjective& objective, const std::vector<Complex>& amplitudes) {
  if (amplitudes.size() != objective.num_channels()) throw Error(ErrorKind::LengthMismatch, "one amplitude per channel");
  PixelSet px;
  for (std::size_t c = 0; c < amplitudes.size(); ++c) {
    px.emplace_back(objective.specs()[c].num_pixels(), amplitudes[c]);
  }
  return px;
}

FlatPulseResult optimize_flat_amplitudes(const FidelityObjective& objective, std::vector<Complex> initial,
                                         double initial_step, std::size_t max_iters, bool local_z) {
  auto unpack = [&](const std::vector<double>& x) {
    std::vector<Complex> a(initial.size());
    for (std::size_t c = 0; c < a.size(); ++c) a[c] = {x[2 * c], x[2 * c + 1]};
    return a;
  };
  std::vector<double> x0;
  for (const auto& a : initial) {
    x0.push_back(a.real());
    x0.push_back(a.imag());
  }
  const auto best = detail::nelder_mead(
      [&](const std::vector<double>& x) {
        const PixelSet px = flat_pixels(objective, unpack(x));
        return local_z ? -local_z_corrected_fidelity(objective.propagator(px), objective.target())
                       : -objective.fidelity(px);
      },
      x0, initial_step, 1e-9, max_iters);
  FlatPulseResult result;
  result.amplitudes = unpack(best.x);
  const Matrix u = objective.propagator(flat_pixels(objective, result.amplitudes));
  result.target = local_z ? local_z_corrected_target(u, objective.target()) : objective.target();
  result.fidelity = fidelity(u, result.target);
  return result;
}

OptimizationTrace grape_optimize(const FidelityObjective& objective, PixelSet initial, const GrapeSettings& settings,
                                 const IterationCallback& callback) {
  if (!(settings.epsilon > 0.0) || !(settings.shrink > 0.0 && settings.shrink < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "step size must be positive and shrink factor in (0, 1)");
  }
  OptimizationTrace trace;
  trace.pixels = std::move(initial);
  GradientReport report = objective.evaluate(trace.pixels);
  auto record = [&](std::size_t it, double eps) {
    IterationRecord r{it, report.fidelity, eps, report.norm()};
    trace.iterations.push_back(r);
    if (callback) callback(r);
  };
  record(0, 0.0);

  for (std::size_t it = 1;; ++it) {
    const double infidelity = 1.0 - report.fidelity;
    if (infidelity < settings.tolerance) {
      trace.reason = "fidelity_tolerance";
      break;
    }
    if (settings.target_infidelity && infidelity < *settings.target_infidelity) {
      trace.reason = "target_infidelity";
      break;
    }
    const double gnorm = report.norm();
    if (gnorm < settings.gradient_tolerance) {
      trace.reason = "gradient_tolerance";
      break;
    }
    if (it > settings.max_iters) {
      trace.reason = "max_iters";
      break;
    }

    auto stepped = [&](double eps) {
      PixelSet next = trace.pixels;
      for (std::size_t c = 0; c < next.size(); ++c) {
        for (std::size_t j = 0; j < next[c].size(); ++j) {
          const auto jj = static_cast<Eigen::Index>(j);
          next[c][j] += eps * Complex(report.grad_x[c](jj), report.grad_y[c](jj));
        }
      }
      return next;
    };

    double eps = settings.epsilon;
    PixelSet next;
    if (settings.policy == StepPolicy::Fixed) {
      next = stepped(eps);
    } else {
      bool accepted = false;
      for (std::size_t h = 0; h <= settings.max_halvings; ++h, eps *= settings.shrink) {
        next = stepped(eps);
        if (objective.fidelity(next) >= report.fidelity + settings.armijo * eps * gnorm * gnorm) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        throw Error(ErrorKind::NoAscentDirection,
                    "line search failed after " + std::to_string(settings.max_halvings) + " halvings at iteration " +
                        std::to_string(it) + " (fidelity " + std::to_string(report.fidelity) + ")");
      }
    }
    trace.pixels = std::move(next);
    report = objective.evaluate(trace.pixels);
    record(it, eps);
  }
  trace.fidelity = report.fidelity;
  return trace;
}

}  // namespace dysolve

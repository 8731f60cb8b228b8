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

#include "dysolve/oracle.hpp"

#include <cmath>
#include <functional>

#include <boost/numeric/odeint.hpp>

#include "dysolve/quadrature.hpp"

namespace dysolve {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

// Drive amplitudes of all channels at time t, restricted to one segment.
using EnvelopeFn = std::function<void(double t, std::vector<Complex>& out)>;

struct Segment {
  double t0;
  double t1;
  EnvelopeFn envelope;
};

// Interaction-frame Hamiltonian H_I(t) = e^{iH0 t} V(t) e^{-iH0 t}.
class InteractionHamiltonian {
 public:
  explicit InteractionHamiltonian(const SystemModel& model) : model_(model), amps_(model.num_channels()) {
    phase_.resize(static_cast<Eigen::Index>(model.dim()));
  }

  void evaluate(const EnvelopeFn& envelope, double t, Matrix& h) {
    envelope(t, amps_);
    const auto n = static_cast<Eigen::Index>(model_.dim());
    for (Eigen::Index k = 0; k < n; ++k) phase_(k) = std::polar(1.0, model_.eigenvalues[static_cast<std::size_t>(k)] * t);
    h.setZero(n, n);
    for (std::size_t c = 0; c < model_.num_channels(); ++c) {
      const double drive = (amps_[c] * std::polar(1.0, model_.channels[c].carrier * t)).real();
      if (drive != 0.0) h += drive * model_.channels[c].dipole;
    }
    h = phase_.asDiagonal() * h * phase_.conjugate().asDiagonal();
  }

 private:
  const SystemModel& model_;
  std::vector<Complex> amps_;
  Eigen::VectorXcd phase_;
};

Matrix integrate_rk(const SystemModel& model, std::span<const Segment> segments, const OracleSettings& settings) {
  const auto n = static_cast<Eigen::Index>(model.dim());
  InteractionHamiltonian ham(model);
  State x(static_cast<std::size_t>(2 * n * n), 0.0);
  {
    Eigen::Map<Matrix> u(reinterpret_cast<Complex*>(x.data()), n, n);
    u.setIdentity();
  }
  Matrix h;
  const EnvelopeFn* current = nullptr;
  auto rhs = [&](const State& in, State& out, double t) {
    ham.evaluate(*current, t, h);
    Eigen::Map<const Matrix> u(reinterpret_cast<const Complex*>(in.data()), n, n);
    Eigen::Map<Matrix> du(reinterpret_cast<Complex*>(out.data()), n, n);
    du.noalias() = Complex(0.0, -1.0) * (h * u);
  };

  auto stepper = odeint::make_controlled(settings.abs_tol, settings.rel_tol, odeint::runge_kutta_dopri5<State>());
  std::size_t attempts = 0;
  double dt = segments.empty() ? 0.0 : (segments[0].t1 - segments[0].t0);
  for (const auto& seg : segments) {
    current = &seg.envelope;
    stepper.reset();
    double t = seg.t0;
    const double len = seg.t1 - seg.t0;
    dt = std::min(dt, len);
    while (seg.t1 - t > 1e-15 * std::max(1.0, std::abs(seg.t1))) {
      const bool last = t + dt >= seg.t1;
      double step = last ? seg.t1 - t : dt;
      const auto res = stepper.try_step(rhs, x, t, step);
      if (++attempts > settings.max_substeps) {
        throw Error(ErrorKind::StepLimitExceeded, "reference integrator exceeded " +
                                                      std::to_string(settings.max_substeps) + " steps");
      }
      if (res == odeint::success) {
        if (last) t = seg.t1;
        // Keep the controller's suggestion unless the step was clipped.
        dt = last ? std::max(dt, step) : step;
      } else {
        dt = step;
        if (step < 1e-14 * std::max(len, 1e-12)) {
          throw Error(ErrorKind::ToleranceNotMet, "step size underflow in reference integrator");
        }
      }
    }
  }
  Eigen::Map<const Matrix> ui(reinterpret_cast<const Complex*>(x.data()), n, n);
  return drift_propagator(model, segments.empty() ? 0.0 : segments.back().t1) * ui;
}

Matrix integrate_magnus2(const SystemModel& model, std::span<const Segment> segments,
                         const OracleSettings& settings) {
  const auto n = static_cast<Eigen::Index>(model.dim());
  InteractionHamiltonian ham(model);
  Matrix u = Matrix::Identity(n, n);
  Matrix h;
  std::size_t total = 0;
  for (const auto& seg : segments) {
    const double len = seg.t1 - seg.t0;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(len * settings.magnus_steps_per_ns)));
    total += steps;
    if (total > settings.max_substeps) throw Error(ErrorKind::StepLimitExceeded, "magnus step limit exceeded");
    const double step = len / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      ham.evaluate(seg.envelope, seg.t0 + (static_cast<double>(i) + 0.5) * step, h);
      const Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      const Eigen::VectorXcd ph = (Complex(0.0, -step) * es.eigenvalues().cast<Complex>()).array().exp();
      u = (es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint()) * u;
    }
  }
  return drift_propagator(model, segments.empty() ? 0.0 : segments.back().t1) * u;
}

Matrix integrate(const SystemModel& model, std::span<const Segment> segments, const OracleSettings& settings) {
  validate(settings);
  return settings.method == OracleMethod::AdaptiveRK ? integrate_rk(model, segments, settings)
                                                     : integrate_magnus2(model, segments, settings);
}

}  // namespace

void validate(const OracleSettings& settings) {
  auto ok = [](double v) { return v > 0.0 && v <= 1e-3; };
  if (!ok(settings.rel_tol) || !ok(settings.abs_tol)) {
    throw Error(ErrorKind::InvalidArgument, "oracle tolerances must lie in (0, 1e-3]");
  }
  if (settings.method == OracleMethod::FixedMagnus2 && !(settings.magnus_steps_per_ns > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "magnus step density must be positive");
  }
}

Matrix reference_propagator(const SystemModel& model, std::span<const SubpixelSequence> seqs,
                            const OracleSettings& settings) {
  if (seqs.size() != model.num_channels()) throw Error(ErrorKind::LengthMismatch, "one sequence per channel");
  if (seqs.empty() || seqs[0].size() == 0) throw Error(ErrorKind::InvalidArgument, "empty schedule");
  const std::size_t p = seqs[0].size();
  const double dt = seqs[0].subpixel_width;
  for (const auto& s : seqs) {
    if (s.size() != p) throw Error(ErrorKind::LengthMismatch, "channel sequences differ in length");
  }
  std::vector<Segment> segments;
  segments.reserve(p);
  for (std::size_t l = 0; l < p; ++l) {
    const double t0 = static_cast<double>(l) * dt;
    segments.push_back({t0, static_cast<double>(l + 1) * dt, [seqs, l, t0](double t, std::vector<Complex>& out) {
                          for (std::size_t c = 0; c < seqs.size(); ++c) {
                            out[c] = seqs[c].level(l) + seqs[c].slope(l) * (t - t0);
                          }
                        }});
  }
  return integrate(model, segments, settings);
}

Matrix reference_propagator(const SystemModel& model, std::span<const PulseSpec> pulses,
                            const OracleSettings& settings) {
  if (pulses.size() != model.num_channels()) throw Error(ErrorKind::LengthMismatch, "one pulse per channel");
  if (pulses.empty()) throw Error(ErrorKind::InvalidArgument, "no pulses");
  for (const auto& spec : pulses) {
    validate(spec);
    if (std::abs(spec.duration() - pulses[0].duration()) > 1e-12 * pulses[0].duration()) {
      throw Error(ErrorKind::LengthMismatch, "pulses differ in duration");
    }
  }
  // Breakpoints at every pixel edge of every channel.
  std::vector<double> edges{0.0, pulses[0].duration()};
  for (const auto& spec : pulses) {
    for (std::size_t j = 1; j < spec.num_pixels(); ++j) edges.push_back(static_cast<double>(j) * spec.pixel_width);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              edges.end());
  auto envelope = [pulses](double t, std::vector<Complex>& out) {
    for (std::size_t c = 0; c < pulses.size(); ++c) out[c] = filtered_envelope(pulses[c], t);
  };
  std::vector<Segment> segments;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) segments.push_back({edges[i], edges[i + 1], envelope});
  return integrate(model, segments, settings);
}

Matrix simplex_path_operator(const SystemModel& model, const FrequencyAssignment& a, double dt,
                             std::optional<std::size_t> slope_position) {
  const std::size_t m = a.order();
  if (m > 2) throw Error(ErrorKind::UnsupportedOrder, "simplex quadrature supports m <= 2");
  if (a.signs.size() != m) throw Error(ErrorKind::InvalidArgument, "assignment channels and signs differ in length");
  for (auto c : a.channels) {
    if (c >= model.num_channels()) throw Error(ErrorKind::IndexOutOfRange, "channel out of range");
  }
  if (slope_position && *slope_position >= m) throw Error(ErrorKind::IndexOutOfRange, "slope position out of range");
  const auto n = static_cast<Eigen::Index>(model.dim());
  if (m == 0) return drift_propagator(model, dt);

  std::vector<double> w(m);
  for (std::size_t p = 0; p < m; ++p) w[p] = a.signs[p] * model.channels[a.channels[p]].carrier;
  auto drift = [&](double t) {
    Eigen::VectorXcd d(n);
    for (Eigen::Index k = 0; k < n; ++k) d(k) = std::polar(1.0, -model.eigenvalues[static_cast<std::size_t>(k)] * t);
    return d;
  };
  const Complex half(0.0, -0.5);

  auto evaluate = [&](std::size_t points) {
    const auto& rule = gauss_legendre(points);
    Matrix sum = Matrix::Zero(n, n);
    if (m == 1) {
      const Matrix& x = model.channels[a.channels[0]].dipole;
      for (std::size_t i = 0; i < points; ++i) {
        const double t1 = 0.5 * dt * (rule.nodes[i] + 1.0);
        const double wt = 0.5 * dt * rule.weights[i];
        Complex scale = wt * std::polar(1.0, w[0] * t1);
        if (slope_position) scale *= t1;
        sum += scale * (drift(dt - t1).asDiagonal() * x * drift(t1).asDiagonal());
      }
      return Matrix(half * sum);
    }
    const Matrix& x1 = model.channels[a.channels[0]].dipole;
    const Matrix& x2 = model.channels[a.channels[1]].dipole;
    for (std::size_t i = 0; i < points; ++i) {
      const double t2 = 0.5 * dt * (rule.nodes[i] + 1.0);
      const double w2 = 0.5 * dt * rule.weights[i];
      const Matrix outer = drift(dt - t2).asDiagonal() * x2;
      Matrix inner = Matrix::Zero(n, n);
      for (std::size_t j = 0; j < points; ++j) {
        const double t1 = 0.5 * t2 * (rule.nodes[j] + 1.0);
        const double w1 = 0.5 * t2 * rule.weights[j];
        Complex scale = w1 * std::polar(1.0, w[0] * t1);
        if (slope_position && *slope_position == 0) scale *= t1;
        inner += scale * (drift(t2 - t1).asDiagonal() * x1 * drift(t1).asDiagonal());
      }
      Complex scale = w2 * std::polar(1.0, w[1] * t2);
      if (slope_position && *slope_position == 1) scale *= t2;
      sum += scale * (outer * inner);
    }
    return Matrix(half * half * sum);
  };

  Matrix previous = evaluate(8);
  for (std::size_t points = 16; points <= 512; points *= 2) {
    Matrix next = evaluate(points);
    if (frobenius_distance(next, previous) < 1e-10) return next;
    previous = std::move(next);
  }
  throw Error(ErrorKind::QuadratureNotConverged, "path quadrature did not converge with 512 points");
}

}  // namespace dysolve

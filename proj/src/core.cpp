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

#include "dysolve/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace dysolve {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonHermitianDipole: return "NonHermitianDipole";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyNodes: return "EmptyNodes";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorKind::CacheTooLarge: return "CacheTooLarge";
    case ErrorKind::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorKind::CorruptCache: return "CorruptCache";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorKind::NoAscentDirection: return "NoAscentDirection";
    case ErrorKind::CutoffTooSmall: return "CutoffTooSmall";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::HybridizationAmbiguity: return "HybridizationAmbiguity";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::NonFiniteResult: return "NonFiniteResult";
  }
  return "Unknown";
}

CheckedSystem validate_system(SystemModel model) {
  const std::size_t n = model.dim();
  if (n < 2) {
    throw Error(ErrorKind::DimensionMismatch, "system needs at least two levels");
  }
  for (double e : model.eigenvalues) {
    if (!std::isfinite(e)) throw Error(ErrorKind::InvalidArgument, "non-finite eigenvalue");
  }
  for (std::size_t c = 0; c < model.channels.size(); ++c) {
    auto& ch = model.channels[c];
    if (static_cast<std::size_t>(ch.dipole.rows()) != n ||
        static_cast<std::size_t>(ch.dipole.cols()) != n) {
      throw Error(ErrorKind::DimensionMismatch,
                  "dipole of channel " + std::to_string(c) + " is not " + std::to_string(n) +
                      "x" + std::to_string(n));
    }
    if (!std::isfinite(ch.carrier) || ch.carrier < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "carrier must be finite and non-negative");
    }
    const double defect = (ch.dipole - ch.dipole.adjoint()).cwiseAbs().maxCoeff();
    if (!(defect < kHermitianSymmetrizeTol)) {
      throw Error(ErrorKind::NonHermitianDipole,
                  "channel " + std::to_string(c) + " deviates from Hermitian by " +
                      std::to_string(defect));
    }
    if (defect > 0.0) {
      Matrix sym = 0.5 * (ch.dipole + ch.dipole.adjoint());
      ch.dipole = std::move(sym);
    }
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return model.eigenvalues[a] < model.eigenvalues[b];
  });

  CheckedSystem out;
  out.permutation = perm;
  out.model.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.model.eigenvalues[i] = model.eigenvalues[perm[i]];
  out.model.channels.reserve(model.channels.size());
  for (const auto& ch : model.channels) {
    DriveChannel pc;
    pc.carrier = ch.carrier;
    pc.dipole.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        pc.dipole(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            ch.dipole(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j]));
      }
    }
    out.model.channels.push_back(std::move(pc));
  }
  return out;
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "frobenius_distance on different shapes");
  }
  return (a - b).norm();
}

double unitarity_defect(const Matrix& u) {
  if (u.rows() != u.cols()) throw Error(ErrorKind::DimensionMismatch, "matrix is not square");
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm();
}

Matrix drift_propagator(const SystemModel& model, double t) {
  const auto n = static_cast<Eigen::Index>(model.dim());
  Matrix u = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    u(k, k) = std::polar(1.0, -model.eigenvalues[static_cast<std::size_t>(k)] * t);
  }
  return u;
}

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::uint64_t fingerprint(const SystemModel& model) {
  Fnv1a h;
  h.u64(model.dim());
  h.u64(model.num_channels());
  for (double e : model.eigenvalues) h.f64(e);
  for (const auto& ch : model.channels) {
    h.f64(ch.carrier);
    for (Eigen::Index i = 0; i < ch.dipole.rows(); ++i) {
      for (Eigen::Index j = 0; j < ch.dipole.cols(); ++j) {
        h.f64(ch.dipole(i, j).real());
        h.f64(ch.dipole(i, j).imag());
      }
    }
  }
  return h.value();
}

}  // namespace dysolve

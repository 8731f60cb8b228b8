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

#include "dysolve/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace dysolve {

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) config_error(std::string("missing key '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) config_error(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(std::string(what) + " must be finite");
  return v;
}

Complex complex_from_json(const Json& j) {
  if (j.is_number()) return {number(j, "matrix entry"), 0.0};
  if (j.is_array() && j.size() == 2) return {number(j[0], "real part"), number(j[1], "imaginary part")};
  config_error("complex values are numbers or [re, im] pairs");
}

Json complex_to_json(Complex v) { return Json::array({v.real(), v.imag()}); }

std::size_t integer(const Json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 0) config_error(std::string(what) + " must be a non-negative integer");
  return j.get<std::size_t>();
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::random_device rd;
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::IoError, "cannot move output into place at " + path.string());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, {reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
}

Json resolve_section(const Json& value, const std::filesystem::path& base_dir) {
  if (value.is_string()) {
    std::filesystem::path p = value.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) config_error("referenced file does not exist: " + p.string());
    return load_json(p);
  }
  if (!value.is_object()) config_error("section must be an object or a file path");
  return value;
}

Matrix matrix_from_json(const Json& j, std::size_t expected_dim) {
  if (!j.is_array() || j.empty()) config_error("matrix must be a non-empty array");
  // A flat row-major list has N^2 scalar or [re, im] entries; anything else
  // is read as rows.
  auto is_scalar = [](const Json& v) { return v.is_number() || (v.is_array() && v.size() == 2 && v[0].is_number()); };
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(j.size()))));
  const bool flat_shape = side * side == j.size() && std::all_of(j.begin(), j.end(), is_scalar);
  const bool nested = !flat_shape;
  std::vector<std::vector<Complex>> rows;
  if (nested) {
    for (const auto& row : j) {
      if (!row.is_array()) config_error("matrix rows must be arrays");
      std::vector<Complex> r;
      for (const auto& v : row) r.push_back(complex_from_json(v));
      rows.push_back(std::move(r));
    }
  } else {
    std::vector<Complex> flat;
    for (const auto& v : j) flat.push_back(complex_from_json(v));
    const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
    if (n * n != flat.size()) config_error("flat matrix length is not a perfect square");
    for (std::size_t r = 0; r < n; ++r) rows.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(r * n),
                                                           flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  }
  const std::size_t n = rows.size();
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != n) config_error("matrix must be square");
    for (std::size_t c = 0; c < n; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  if (expected_dim != 0 && n != expected_dim) {
    throw Error(ErrorKind::DimensionMismatch, "matrix is " + std::to_string(n) + "x" + std::to_string(n) +
                                                  ", expected " + std::to_string(expected_dim));
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

SystemModel system_from_json(const Json& j) {
  SystemModel model;
  const auto& eig = require(j, "eigenvalues_ghz");
  if (!eig.is_array()) config_error("eigenvalues_ghz must be an array");
  for (const auto& e : eig) model.eigenvalues.push_back(ghz_to_angular(number(e, "eigenvalue")));
  const auto& channels = require(j, "channels");
  if (!channels.is_array() || channels.empty()) config_error("channels must be a non-empty array");
  for (const auto& ch : channels) {
    DriveChannel c;
    c.dipole = matrix_from_json(require(ch, "dipole"));
    c.carrier = ghz_to_angular(number(require(ch, "carrier_ghz"), "carrier_ghz"));
    model.channels.push_back(std::move(c));
  }
  return validate_system(std::move(model)).model;
}

Json system_to_json(const SystemModel& model) {
  Json j;
  Json eig = Json::array();
  for (double e : model.eigenvalues) eig.push_back(angular_to_ghz(e));
  j["eigenvalues_ghz"] = std::move(eig);
  Json channels = Json::array();
  for (const auto& ch : model.channels) {
    channels.push_back({{"dipole", matrix_to_json(ch.dipole)}, {"carrier_ghz", angular_to_ghz(ch.carrier)}});
  }
  j["channels"] = std::move(channels);
  return j;
}

std::vector<PulseSpec> pulses_from_json(const Json& j) {
  PulseSpec base;
  base.pixel_width = number(require(j, "pixel_width_ns"), "pixel_width_ns");
  if (j.contains("subpixels_per_pixel")) base.subpixels_per_pixel = integer(j["subpixels_per_pixel"], "subpixels_per_pixel");
  if (j.contains("filter_bandwidth_ghz") && !j["filter_bandwidth_ghz"].is_null()) {
    base.filter_bandwidth = ghz_to_angular(number(j["filter_bandwidth_ghz"], "filter_bandwidth_ghz"));
  }
  if (j.contains("interpolation")) {
    const auto mode = j["interpolation"].get<std::string>();
    if (mode == "constant") base.interpolation = Interpolation::Constant;
    else if (mode == "linear") base.interpolation = Interpolation::Linear;
    else config_error("interpolation must be 'constant' or 'linear'");
  }
  std::vector<PulseSpec> out;
  const auto& channels = require(j, "channels");
  if (!channels.is_array() || channels.empty()) config_error("pulse channels must be a non-empty array");
  for (const auto& ch : channels) {
    PulseSpec p = base;
    if (ch.contains("constant_mhz")) {
      const std::size_t count = integer(require(ch, "num_pixels"), "num_pixels");
      p.pixels.assign(count, complex_from_json(ch["constant_mhz"]) * mhz_to_angular(1.0));
    } else {
      const auto& px = require(ch, "pixels_mhz");
      if (!px.is_array() || px.empty()) config_error("pixels_mhz must be a non-empty array");
      for (const auto& v : px) p.pixels.push_back(complex_from_json(v) * mhz_to_angular(1.0));
    }
    try {
      validate(p);
    } catch (const Error& e) {
      config_error(e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

Json pulses_to_json(const std::vector<PulseSpec>& pulses) {
  if (pulses.empty()) return Json::object();
  Json j;
  j["pixel_width_ns"] = pulses[0].pixel_width;
  j["subpixels_per_pixel"] = pulses[0].subpixels_per_pixel;
  j["filter_bandwidth_ghz"] = pulses[0].filtered() ? Json(angular_to_ghz(pulses[0].filter_bandwidth)) : Json(nullptr);
  j["interpolation"] = pulses[0].interpolation == Interpolation::Linear ? "linear" : "constant";
  Json channels = Json::array();
  for (const auto& p : pulses) {
    Json px = Json::array();
    for (const auto& u : p.pixels) px.push_back(complex_to_json(u / mhz_to_angular(1.0)));
    channels.push_back({{"pixels_mhz", std::move(px)}});
  }
  j["channels"] = std::move(channels);
  return j;
}

OptimizationConfig optimization_from_json(const Json& j) {
  OptimizationConfig cfg;
  const auto& target = require(j, "target");
  try {
    cfg.target.target = target.is_string() ? named_gate(target.get<std::string>()) : matrix_from_json(target);
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (j.contains("subspace")) {
    for (const auto& k : j["subspace"]) cfg.target.subspace.push_back(integer(k, "subspace index"));
  } else {
    for (Eigen::Index k = 0; k < cfg.target.target.rows(); ++k) cfg.target.subspace.push_back(static_cast<std::size_t>(k));
  }
  if (j.contains("frame")) {
    const auto frame = j["frame"].get<std::string>();
    if (frame == "drift") cfg.drift_frame = true;
    else if (frame != "none") config_error("frame must be 'none' or 'drift'");
  }
  if (j.contains("epsilon_policy")) {
    const auto policy = j["epsilon_policy"].get<std::string>();
    if (policy == "fixed") cfg.grape.policy = StepPolicy::Fixed;
    else if (policy == "backtracking") cfg.grape.policy = StepPolicy::Backtracking;
    else config_error("epsilon_policy must be 'fixed' or 'backtracking'");
  }
  if (j.contains("epsilon")) cfg.grape.epsilon = number(j["epsilon"], "epsilon");
  if (j.contains("max_iters")) cfg.grape.max_iters = integer(j["max_iters"], "max_iters");
  if (j.contains("armijo")) cfg.grape.armijo = number(j["armijo"], "armijo");
  if (j.contains("max_halvings")) cfg.grape.max_halvings = integer(j["max_halvings"], "max_halvings");
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    if (t.contains("infidelity")) cfg.grape.tolerance = number(t["infidelity"], "tolerances.infidelity");
    if (t.contains("gradient")) cfg.grape.gradient_tolerance = number(t["gradient"], "tolerances.gradient");
    if (t.contains("target_infidelity")) cfg.grape.target_infidelity = number(t["target_infidelity"], "target_infidelity");
  }
  if (!(cfg.grape.epsilon > 0.0)) config_error("epsilon must be positive");
  return cfg;
}

}  // namespace dysolve

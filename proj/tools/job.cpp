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

#include "job.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "dysolve/parallel.hpp"

namespace dysolve::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

double get_number(const Json& j, const char* key, double fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  if (!j[key].is_number()) config_error(std::string(key) + " must be a number");
  return j[key].get<double>();
}

std::size_t get_count(const Json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  if (!j[key].is_number_integer() || j[key].get<long long>() < 0) {
    config_error(std::string(key) + " must be a non-negative integer");
  }
  return j[key].get<std::size_t>();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

unsigned Job::threads() const {
  if (overrides.threads) return *overrides.threads;
  return static_cast<unsigned>(get_count(config, "threads", 0));
}

fs::path Job::out_dir() const {
  if (overrides.out) return *overrides.out;
  if (has("output_dir")) {
    fs::path p = config["output_dir"].get<std::string>();
    return p.is_relative() ? base_dir / p : p;
  }
  return fs::current_path();
}

std::size_t Job::order() const {
  const std::size_t n = overrides.order ? *overrides.order : get_count(config, "order", 4);
  if (n > kMaxTruncationOrder) {
    throw Error(ErrorKind::UnsupportedOrder, "truncation order " + std::to_string(n) + " is outside 0..4");
  }
  return n;
}

std::uint64_t Job::seed() const {
  if (overrides.seed) return *overrides.seed;
  return static_cast<std::uint64_t>(get_count(config, "seed", 0));
}

Json Job::section(const char* key) const {
  if (!has(key)) config_error(std::string("config has no '") + key + "' section");
  return resolve_section(config[key], base_dir);
}

Job load_job(const std::optional<fs::path>& path, const Overrides& overrides) {
  Job job;
  job.overrides = overrides;
  if (path) {
    if (!fs::exists(*path)) config_error("config file does not exist: " + path->string());
    job.config = load_json(*path);
    if (!job.config.is_object()) config_error("config must be a JSON object");
    job.base_dir = fs::absolute(*path).parent_path();
  } else {
    job.config = Json::object();
    job.base_dir = fs::current_path();
  }
  return job;
}

BenchmarkEnsembleSpec benchmark_spec_from_json(const Json& j, std::uint64_t seed) {
  BenchmarkEnsembleSpec s;
  s.seed = j.contains("seed") ? get_count(j, "seed", 0) : seed;
  s.dim = get_count(j, "dim", s.dim);
  s.num_drives = get_count(j, "num_drives", s.num_drives);
  s.eigenvalue_mean_ghz = get_number(j, "eigenvalue_mean_ghz", s.eigenvalue_mean_ghz);
  s.eigenvalue_std_ghz = get_number(j, "eigenvalue_std_ghz", s.eigenvalue_std_ghz);
  s.offresonant_fill = get_number(j, "offresonant_fill", s.offresonant_fill);
  s.offresonant_std = get_number(j, "offresonant_std", s.offresonant_std);
  s.amplitude_mean_mhz = get_number(j, "amplitude_mean_mhz", s.amplitude_mean_mhz);
  s.amplitude_std_mhz = get_number(j, "amplitude_std_mhz", s.amplitude_std_mhz);
  s.duration_ns = get_number(j, "duration_ns", s.duration_ns);
  s.pixel_width_ns = get_number(j, "pixel_width_ns", s.pixel_width_ns);
  s.subpixels_per_pixel = get_count(j, "subpixels_per_pixel", s.subpixels_per_pixel);
  if (j.contains("filter_bandwidth_ghz") && !j["filter_bandwidth_ghz"].is_null()) {
    s.filter_bandwidth = ghz_to_angular(get_number(j, "filter_bandwidth_ghz", 0.0));
  }
  return s;
}

CoupledSpec coupled_spec_from_json(const Json& j) {
  const std::size_t cutoff = get_count(j, "charge_cutoff", 15);
  const std::size_t levels = get_count(j, "levels_per_qubit", 5);
  CoupledSpec spec;
  spec.control = calibrate_transmon(ghz_to_angular(get_number(j, "control_ghz", 5.1)),
                                    ghz_to_angular(get_number(j, "control_anharmonicity_ghz", -0.355)), cutoff, levels);
  spec.target = calibrate_transmon(ghz_to_angular(get_number(j, "target_ghz", 4.9)),
                                   ghz_to_angular(get_number(j, "target_anharmonicity_ghz", -0.352)), cutoff, levels);
  spec.g = mhz_to_angular(get_number(j, "coupling_mhz", 4.29));
  spec.levels_per_qubit = levels;
  return spec;
}

OracleSettings oracle_settings_from_json(const Json& j) {
  OracleSettings s;
  s.rel_tol = get_number(j, "rel_tol", s.rel_tol);
  s.abs_tol = get_number(j, "abs_tol", s.abs_tol);
  s.max_substeps = get_count(j, "max_substeps", s.max_substeps);
  if (j.contains("method")) {
    const auto m = j["method"].get<std::string>();
    if (m == "adaptive_rk") s.method = OracleMethod::AdaptiveRK;
    else if (m == "magnus2") s.method = OracleMethod::FixedMagnus2;
    else config_error("reference method must be 'adaptive_rk' or 'magnus2'");
  }
  s.magnus_steps_per_ns = get_number(j, "magnus_steps_per_ns", s.magnus_steps_per_ns);
  try {
    validate(s);
  } catch (const Error& e) {
    config_error(e.what());
  }
  return s;
}

LoadedSystem load_system(const Job& job) {
  LoadedSystem out;
  const Json j = job.section("system");
  if (j.contains("benchmark")) {
    out.kind = "benchmark";
    auto inst = build_benchmark_ensemble(benchmark_spec_from_json(j["benchmark"], job.seed()));
    out.model = std::move(inst.model);
    out.pulses = std::move(inst.pulses);
  } else if (j.contains("cross_resonance")) {
    out.kind = "cross_resonance";
    auto cr = build_cross_resonance(coupled_spec_from_json(j["cross_resonance"]));
    out.model = std::move(cr.model);
    out.target = std::move(cr.target);
    out.overlap_margin = cr.min_overlap_margin;
  } else {
    out.kind = "file";
    out.model = system_from_json(j);
  }
  return out;
}

std::vector<PulseSpec> load_pulses(const Job& job, const LoadedSystem& system) {
  std::vector<PulseSpec> pulses;
  if (job.has("pulses")) {
    pulses = pulses_from_json(job.section("pulses"));
  } else if (!system.pulses.empty()) {
    pulses = system.pulses;
  } else {
    config_error("no pulses given and the system generator provides none");
  }
  if (job.overrides.subpixels) {
    if (*job.overrides.subpixels == 0) config_error("--subpixels must be positive");
    for (auto& p : pulses) p.subpixels_per_pixel = *job.overrides.subpixels;
  }
  if (pulses.size() != system.model.num_channels()) {
    throw Error(ErrorKind::LengthMismatch, "system has " + std::to_string(system.model.num_channels()) +
                                               " channels but " + std::to_string(pulses.size()) + " pulses were given");
  }
  return pulses;
}

OptimizationConfig load_optimization(const Job& job, const LoadedSystem& system, double duration) {
  Json j = job.has("optimization") ? job.section("optimization") : Json::object();
  if (!j.contains("target")) {
    if (!system.target) config_error("optimization.target is required for this system");
    j["target"] = matrix_to_json(system.target->target);
    if (!j.contains("subspace")) j["subspace"] = system.target->subspace;
  }
  OptimizationConfig cfg = optimization_from_json(j);
  try {
    validate(cfg.target, system.model.dim());
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (cfg.drift_frame) cfg.target.frame_phases = drift_frame_phases(system.model, cfg.target.subspace, duration);
  return cfg;
}

std::string cache_file_name(const SystemModel& model, std::size_t order, double dt, bool slopes) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%016llx_n%zu_dt%.17g%s.dyc", static_cast<unsigned long long>(fingerprint(model)),
                order, dt, slopes ? "_lin" : "");
  return buf;
}

CacheLookup obtain_cache(const Job& job, const SystemModel& model, std::size_t order, double dt, bool slopes) {
  CacheLookup out;
  if (job.has("cache")) {
    fs::path p = job.config["cache"].get<std::string>();
    out.path = p.is_relative() ? job.base_dir / p : p;
  } else if (const char* dir = std::getenv("DYSOLVE_CACHE_DIR"); dir && *dir) {
    out.path = fs::path(dir) / cache_file_name(model, order, dt, slopes);
  }
  const auto t0 = std::chrono::steady_clock::now();
  if (out.path && fs::exists(*out.path)) {
    out.cache = load_cache(*out.path, model);
    if (out.cache.truncation_order != order || out.cache.subpixel_width != dt || (slopes && !out.cache.has_slopes())) {
      config_error("cache " + out.path->string() + " was prepared for a different order, subpixel width or interpolation");
    }
    out.loaded = true;
  } else {
    PrepareOptions opts;
    opts.with_slopes = slopes;
    opts.threads = job.threads();
    out.cache = prepare(model, order, dt, opts);
    if (out.path) save_cache(out.cache, *out.path);
  }
  out.seconds = seconds_since(t0);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_csv(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
  std::ostringstream os;
  os << "#schema=1\n" << header << '\n';
  for (const auto& r : rows) os << r << '\n';
  write_text_atomic(path, os.str());
}

}  // namespace dysolve::cli

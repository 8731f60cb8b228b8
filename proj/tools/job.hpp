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

// Job configuration shared by the CLI subcommands.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dysolve/control.hpp"
#include "dysolve/dyson.hpp"
#include "dysolve/io.hpp"
#include "dysolve/models.hpp"
#include "dysolve/oracle.hpp"

namespace dysolve::cli {

struct Overrides {
  std::optional<std::size_t> order;
  std::optional<std::size_t> subpixels;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::filesystem::path> out;
};

struct Job {
  Json config;
  std::filesystem::path base_dir;
  Overrides overrides;

  unsigned threads() const;
  std::filesystem::path out_dir() const;
  /// --order, then "order", then 4. Throws UnsupportedOrder above 4.
  std::size_t order() const;
  std::uint64_t seed() const;
  bool has(const char* key) const { return config.contains(key) && !config[key].is_null(); }
  Json section(const char* key) const;
};

Job load_job(const std::optional<std::filesystem::path>& path, const Overrides& overrides);

/// A system plus whatever its generator provides alongside it.
struct LoadedSystem {
  std::string kind;  // "file", "benchmark" or "cross_resonance"
  SystemModel model;
  std::vector<PulseSpec> pulses;   // benchmark generator pulses
  std::optional<GateTarget> target;  // cross-resonance ZX90 target (no frame)
  double overlap_margin = 0.0;
};

LoadedSystem load_system(const Job& job);

/// "pulses" section if present, else the generator's pulses, with
/// --subpixels applied.
std::vector<PulseSpec> load_pulses(const Job& job, const LoadedSystem& system);

BenchmarkEnsembleSpec benchmark_spec_from_json(const Json& j, std::uint64_t seed);
CoupledSpec coupled_spec_from_json(const Json& j);
OracleSettings oracle_settings_from_json(const Json& j);

/// Optimization section with the target resolved against the system (a
/// cross-resonance system supplies ZX90 when no target is given) and the
/// drift frame applied for the given duration.
OptimizationConfig load_optimization(const Job& job, const LoadedSystem& system, double duration);

struct CacheLookup {
  DysonCache cache;
  std::optional<std::filesystem::path> path;
  bool loaded = false;
  double seconds = 0.0;
};

/// Default cache file name for a system, order and subpixel width.
std::string cache_file_name(const SystemModel& model, std::size_t order, double dt, bool slopes);

/// Loads a matching cache from "cache" or DYSOLVE_CACHE_DIR when present,
/// otherwise prepares one (and stores it under DYSOLVE_CACHE_DIR if set).
CacheLookup obtain_cache(const Job& job, const SystemModel& model, std::size_t order, double dt, bool slopes);

/// Atomic write of a CSV whose first line is "#schema=1".
void write_csv(const std::filesystem::path& path, const std::string& header, const std::vector<std::string>& rows);

std::string format_double(double v);

}  // namespace dysolve::cli

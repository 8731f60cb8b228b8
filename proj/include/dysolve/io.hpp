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

#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dysolve/control.hpp"
#include "dysolve/core.hpp"
#include "dysolve/pulses.hpp"

namespace dysolve {

using Json = nlohmann::json;

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

/// Parses a JSON file. IoError when unreadable, ConfigError when malformed.
Json load_json(const std::filesystem::path& path);

/// A config value that is either an inline object or a path (relative to
/// `base_dir`) of a JSON file holding it.
Json resolve_section(const Json& value, const std::filesystem::path& base_dir);

/// Complex matrix from nested rows or a flat row-major list; entries are
/// numbers or [re, im] pairs.
Matrix matrix_from_json(const Json& j, std::size_t expected_dim = 0);
Json matrix_to_json(const Matrix& m);

/// {"eigenvalues_ghz": [...], "channels": [{"dipole": ..., "carrier_ghz": f}]}
/// The result is passed through validate_system.
SystemModel system_from_json(const Json& j);
Json system_to_json(const SystemModel& model);

/// {"pixel_width_ns", "subpixels_per_pixel", "filter_bandwidth_ghz" (null or
///  absent = unfiltered), "interpolation": "constant"|"linear",
///  "channels": [{"pixels_mhz": [...]} or {"constant_mhz": v, "num_pixels": n}]}
std::vector<PulseSpec> pulses_from_json(const Json& j);
Json pulses_to_json(const std::vector<PulseSpec>& pulses);

struct OptimizationConfig {
  GateTarget target;
  bool drift_frame = false;
  GrapeSettings grape;
};

/// {"target": "X90" | matrix, "subspace": [...], "frame": "none"|"drift",
///  "epsilon_policy": "fixed"|"backtracking", "epsilon", "max_iters",
///  "tolerances": {"infidelity", "gradient"}, "armijo", "max_halvings"}
OptimizationConfig optimization_from_json(const Json& j);

}  // namespace dysolve

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

// dysolve command-line tool.

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "dysolve/control.hpp"
#include "dysolve/dyson.hpp"
#include "dysolve/io.hpp"
#include "dysolve/models.hpp"
#include "dysolve/oracle.hpp"
#include "dysolve/propagate.hpp"
#include "dysolve/pulses.hpp"
#include "job.hpp"

namespace fs = std::filesystem;
using namespace dysolve;
using namespace dysolve::cli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitVerification = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::StepLimitExceeded:
    case ErrorKind::ToleranceNotMet:
    case ErrorKind::QuadratureNotConverged:
    case ErrorKind::NoAscentDirection:
    case ErrorKind::NoConvergence:
    case ErrorKind::CutoffTooSmall:
    case ErrorKind::NonFiniteResult:
      return kExitNumeric;
    default:
      return kExitConfig;
  }
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_json(const fs::path& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

// Timestamps and wall times live here so the other outputs stay
// byte-reproducible.
void write_metadata(const Job& job, const std::string& command, Json extra) {
  extra["command"] = command;
  extra["finished_utc"] = utc_timestamp();
  extra["threads"] = job.threads();
  write_json(job.out_dir() / "metadata.json", extra);
}

std::vector<SubpixelSequence> sequences_of(const std::vector<PulseSpec>& pulses) {
  std::vector<SubpixelSequence> seqs;
  for (const auto& p : pulses) seqs.push_back(subpixel_amplitudes(p));
  return seqs;
}

bool any_linear(const std::vector<PulseSpec>& pulses) {
  for (const auto& p : pulses) {
    if (p.interpolation == Interpolation::Linear) return true;
  }
  return false;
}

double subpixel_width_of(const Job& job, const std::vector<PulseSpec>& pulses) {
  if (job.has("subpixel_width_ns")) return job.config["subpixel_width_ns"].get<double>();
  return pulses.at(0).subpixel_width();
}

// ---------------------------------------------------------------- model

int cmd_model(const Job& job) {
  Job j = job;
  if (!j.has("system")) j.config["system"] = Json{{"benchmark", Json::object()}};
  const auto sys = load_system(j);
  const fs::path out = j.out_dir();
  write_json(out / "system.json", system_to_json(sys.model));
  std::cout << "kind=" << sys.kind << " dim=" << sys.model.dim() << " channels=" << sys.model.num_channels()
            << " fingerprint=" << hex64(fingerprint(sys.model)) << "\n";
  if (!sys.pulses.empty()) write_json(out / "pulses.json", pulses_to_json(sys.pulses));
  if (sys.target) {
    Json t;
    t["target"] = matrix_to_json(sys.target->target);
    t["subspace"] = sys.target->subspace;
    t["frame"] = "drift";
    write_json(out / "target.json", t);
    std::cout << "overlap_margin=" << format_double(sys.overlap_margin) << "\n";
  }
  std::cout << "wrote " << (out / "system.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- prepare

int cmd_prepare(const Job& job) {
  const auto sys = load_system(job);
  const std::size_t order = job.order();
  double dt = 0.0;
  bool slopes = job.has("with_slopes") && job.config["with_slopes"].get<bool>();
  if (job.has("subpixel_width_ns")) {
    dt = job.config["subpixel_width_ns"].get<double>();
  } else {
    const auto pulses = load_pulses(job, sys);
    dt = pulses[0].subpixel_width();
    slopes = slopes || any_linear(pulses);
  }
  PrepareOptions opts;
  opts.with_slopes = slopes;
  opts.threads = job.threads();
  if (job.has("memory_budget_bytes")) opts.memory_budget_bytes = job.config["memory_budget_bytes"].get<std::size_t>();

  fs::path path;
  if (job.has("cache")) {
    path = job.config["cache"].get<std::string>();
    if (path.is_relative()) path = job.base_dir / path;
  } else if (const char* dir = std::getenv("DYSOLVE_CACHE_DIR"); dir && *dir) {
    path = fs::path(dir) / cache_file_name(sys.model, order, dt, slopes);
  } else {
    path = job.out_dir() / cache_file_name(sys.model, order, dt, slopes);
  }

  const auto t0 = Clock::now();
  const DysonCache cache = prepare(sys.model, order, dt, opts);
  const double prep = seconds_since(t0);
  save_cache(cache, path);
  const std::uint32_t crc = stored_checksum(path);
  std::cout << "R=" << cache.entries.size() << "\n";
  if (slopes) std::cout << "slope_entries=" << cache.slope_entries.size() << "\n";
  std::cout << "checksum=" << std::hex << std::setw(8) << std::setfill('0') << crc << std::dec << "\n";
  std::cout << "wall_time_s=" << format_double(prep) << "\n";
  std::cout << "wrote " << path.string() << "\n";
  write_metadata(job, "prepare", {{"cache", path.string()}, {"entries", cache.entries.size()}, {"preparation_s", prep}});
  return kExitOk;
}

// ---------------------------------------------------------------- propagate

Matrix reference_for(const Job& job, const SystemModel& model, const std::vector<PulseSpec>& pulses,
                     double duration) {
  const Json& r = job.config["reference"];
  if (r.is_string()) {
    const std::string s = r.get<std::string>();
    if (s == "drift") return drift_propagator(model, duration);
    fs::path p = s;
    if (p.is_relative()) p = job.base_dir / p;
    return load_matrix(p);
  }
  if (!r.is_object()) throw Error(ErrorKind::ConfigError, "reference must be 'drift', a matrix path or an oracle object");
  const OracleSettings settings = oracle_settings_from_json(r);
  const bool continuous = r.value("continuous", false);
  if (continuous) return reference_propagator(model, std::span<const PulseSpec>(pulses), settings);
  // Staircase at the configured subpixel density.
  const auto seqs = sequences_of(pulses);
  return reference_propagator(model, std::span<const SubpixelSequence>(seqs), settings);
}

int cmd_propagate(const Job& job) {
  const auto sys = load_system(job);
  const auto pulses = load_pulses(job, sys);
  const std::size_t order = job.order();
  const double dt = subpixel_width_of(job, pulses);
  const auto lookup = obtain_cache(job, sys.model, order, dt, any_linear(pulses));

  const auto seqs = sequences_of(pulses);
  ContractionOptions copts;
  copts.threads = job.threads();
  const auto t0 = Clock::now();
  const auto result = propagate(lookup.cache, std::span<const SubpixelSequence>(seqs), copts);
  const double contraction = seconds_since(t0);

  const fs::path out = job.out_dir();
  save_matrix(result.total, out / "propagator.dmat");
  Json metrics;
  metrics["order"] = order;
  metrics["entries"] = lookup.cache.entries.size();
  metrics["subpixel_width_ns"] = dt;
  metrics["num_subpixels"] = result.num_subpixels;
  metrics["unitarity_defect"] = unitarity_defect(result.total);
  std::cout << "R=" << lookup.cache.entries.size() << " subpixels=" << result.num_subpixels << "\n";
  std::cout << "unitarity_defect=" << format_double(unitarity_defect(result.total)) << "\n";
  double ref_seconds = 0.0;
  if (job.has("reference")) {
    const auto t1 = Clock::now();
    const Matrix ref = reference_for(job, sys.model, pulses, pulses[0].duration());
    ref_seconds = seconds_since(t1);
    const double d = frobenius_distance(result.total, ref);
    metrics["reference_distance"] = d;
    std::cout << "frobenius_distance=" << format_double(d) << "\n";
  }
  write_json(out / "propagate.json", metrics);
  std::cout << "wrote " << (out / "propagator.dmat").string() << "\n";
  write_metadata(job, "propagate",
                 {{"cache_loaded", lookup.loaded},
                  {"cache_path", lookup.path ? lookup.path->string() : ""},
                  {"preparation_s", lookup.loaded ? 0.0 : lookup.seconds},
                  {"contraction_s", contraction},
                  {"reference_s", ref_seconds}});
  return kExitOk;
}

// ---------------------------------------------------------------- benchmark

template <class T>
std::vector<T> list_or(const Json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  return j[key].get<std::vector<T>>();
}

int cmd_benchmark(const Job& job) {
  const Json b = job.has("benchmark") ? job.section("benchmark") : Json::object();
  const std::size_t seeds = b.value("seeds", std::size_t{3});
  const std::uint64_t first_seed = job.seed();
  auto orders = list_or<std::size_t>(b, "orders", {2, 3, 4});
  if (job.overrides.order) orders = {job.order()};
  const auto drives = list_or<std::size_t>(b, "drives", {1});
  auto subpixels = list_or<std::size_t>(b, "subpixels", {5, 10, 20, 40, 80});
  if (job.overrides.subpixels) subpixels = {*job.overrides.subpixels};
  const Json ensemble = b.value("ensemble", Json::object());
  const Json reference = b.value("reference", Json::object());
  const OracleSettings oracle = oracle_settings_from_json(reference);
  const bool continuous = reference.value("continuous", false);
  for (std::size_t n : orders) {
    if (n > kMaxTruncationOrder) throw Error(ErrorKind::UnsupportedOrder, "order " + std::to_string(n) + " is outside 0..4");
  }
  if (seeds == 0 || subpixels.empty() || drives.empty()) throw Error(ErrorKind::ConfigError, "empty benchmark sweep");

  struct Acc {
    double error = 0.0, prep = 0.0, contraction = 0.0;
    std::size_t entries = 0;
  };
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Acc> acc;
  ContractionOptions copts;
  copts.threads = job.threads();
  double reference_seconds = 0.0;

  for (std::size_t q : drives) {
    for (std::size_t s = 0; s < seeds; ++s) {
      auto spec = benchmark_spec_from_json(ensemble, first_seed + s);
      spec.seed = first_seed + s;
      spec.num_drives = q;
      const auto inst = build_benchmark_ensemble(spec);
      for (std::size_t ns : subpixels) {
        auto pulses = inst.pulses;
        for (auto& p : pulses) p.subpixels_per_pixel = ns;
        const auto seqs = sequences_of(pulses);
        // The oracle sees the same subpixel envelope as the solver unless the
        // continuous filtered envelope is requested.
        const auto t0 = Clock::now();
        const Matrix ref = continuous
                               ? reference_propagator(inst.model, std::span<const PulseSpec>(pulses), oracle)
                               : reference_propagator(inst.model, std::span<const SubpixelSequence>(seqs), oracle);
        reference_seconds += seconds_since(t0);
        for (std::size_t n : orders) {
          PrepareOptions popts;
          popts.threads = job.threads();
          const auto tp = Clock::now();
          const DysonCache cache = prepare(inst.model, n, pulses[0].subpixel_width(), popts);
          const double prep = seconds_since(tp);
          const auto tc = Clock::now();
          const auto result = propagate(cache, std::span<const SubpixelSequence>(seqs), copts);
          const double contraction = seconds_since(tc);
          auto& a = acc[{n, q, ns}];
          a.error += frobenius_distance(result.total, ref) / static_cast<double>(seeds);
          a.prep += prep / static_cast<double>(seeds);
          a.contraction += contraction / static_cast<double>(seeds);
          a.entries = cache.entries.size();
        }
      }
      std::cout << "drives=" << q << " seed=" << spec.seed << " done\n" << std::flush;
    }
  }

  std::vector<std::string> rows, timing_rows;
  Json entries = Json::object();
  for (const auto& [key, a] : acc) {
    const auto [n, q, ns] = key;
    rows.push_back(std::to_string(n) + "," + std::to_string(q) + "," + std::to_string(ns) + "," +
                   std::to_string(a.entries) + "," + format_double(a.error));
    timing_rows.push_back(std::to_string(n) + "," + std::to_string(q) + "," + std::to_string(ns) + "," +
                          format_double(a.contraction) + "," + format_double(a.prep));
    entries["order" + std::to_string(n) + "_drives" + std::to_string(q)] = a.entries;
  }
  const fs::path out = job.out_dir();
  write_csv(out / "benchmark.csv", "order,drives,subpixels,entries,error", rows);
  write_csv(out / "timing.csv", "order,drives,subpixels,contraction_time_s,preparation_time_s", timing_rows);
  write_metadata(job, "benchmark",
                 {{"seeds", seeds}, {"first_seed", first_seed}, {"entries", entries}, {"reference_s", reference_seconds}});
  std::cout << "wrote " << (out / "benchmark.csv").string() << " and timing.csv\n";
  return kExitOk;
}

// ---------------------------------------------------------------- optimize

PixelSet pixels_of(const std::vector<PulseSpec>& pulses) {
  PixelSet px;
  for (const auto& p : pulses) px.push_back(p.pixels);
  return px;
}

std::vector<PulseSpec> with_pixels(std::vector<PulseSpec> pulses, const PixelSet& px) {
  for (std::size_t c = 0; c < pulses.size(); ++c) pulses[c].pixels = px[c];
  return pulses;
}

std::string trace_row(const IterationRecord& r) {
  return std::to_string(r.iteration) + "," + format_double(r.fidelity) + "," + format_double(1.0 - r.fidelity) + "," +
         format_double(r.epsilon) + "," + format_double(r.gradient_norm);
}

int cmd_optimize(const Job& job) {
  const auto sys = load_system(job);
  const auto pulses = load_pulses(job, sys);
  const std::size_t order = job.order();
  const double dt = subpixel_width_of(job, pulses);
  auto cfg = load_optimization(job, sys, pulses[0].duration());
  const Json opt = job.has("optimization") ? job.section("optimization") : Json::object();
  const std::string mode = opt.value("mode", std::string("grape"));
  if (mode != "grape" && mode != "evaluate" && mode != "flat") {
    throw Error(ErrorKind::ConfigError, "optimization.mode must be 'grape', 'evaluate' or 'flat'");
  }
  const auto lookup = obtain_cache(job, sys.model, order, dt, any_linear(pulses));
  ObjectiveOptions oopts;
  oopts.threads = job.threads();

  Json summary;
  summary["order"] = order;
  summary["mode"] = mode;
  const fs::path out = job.out_dir();
  PixelSet start = pixels_of(pulses);
  GateTarget target = cfg.target;
  const auto t0 = Clock::now();

  if (mode == "flat") {
    const FidelityObjective flat_obj(lookup.cache, pulses, target, oopts);
    const Json f = opt.value("flat", Json::object());
    std::vector<Complex> initial(pulses.size(), Complex{});
    if (f.contains("initial_mhz")) {
      const auto& init = f["initial_mhz"];
      if (!init.is_array() || init.size() != pulses.size()) {
        throw Error(ErrorKind::ConfigError, "flat.initial_mhz needs one [re, im] per channel");
      }
      for (std::size_t c = 0; c < initial.size(); ++c) {
        initial[c] = Complex(init[c][0].get<double>(), init[c][1].get<double>()) * mhz_to_angular(1.0);
      }
    } else {
      for (std::size_t c = 0; c < initial.size(); ++c) initial[c] = pulses[c].pixels.at(0);
    }
    const bool local_z = f.value("local_z", false);
    const auto flat = optimize_flat_amplitudes(flat_obj, initial, mhz_to_angular(f.value("step_mhz", 2.0)),
                                               f.value("max_iters", std::size_t{400}), local_z);
    target = flat.target;
    start = flat_pixels(flat_obj, flat.amplitudes);
    summary["flat_fidelity"] = flat.fidelity;
    Json amps = Json::array();
    for (const auto& a : flat.amplitudes) amps.push_back({angular_to_mhz(a.real()), angular_to_mhz(a.imag())});
    summary["flat_amplitudes_mhz"] = amps;
    summary["local_z"] = local_z;
    std::cout << "flat_fidelity=" << format_double(flat.fidelity) << "\n";
    if (f.value("then_grape", false)) {
      const double factor = f.value("improvement", 10.0);
      cfg.grape.target_infidelity = (1.0 - flat.fidelity) / factor;
    } else {
      cfg.grape.max_iters = 0;
    }
    if (local_z) {
      Json t;
      t["target"] = matrix_to_json(target.target);
      t["subspace"] = target.subspace;
      write_json(out / "corrected_target.json", t);
    }
  }

  const FidelityObjective obj(lookup.cache, pulses, target, oopts);
  std::vector<std::string> rows;
  OptimizationTrace trace;
  if (mode == "evaluate") {
    trace.pixels = start;
    trace.fidelity = obj.fidelity(start);
    trace.reason = "evaluate";
    rows.push_back(trace_row({0, trace.fidelity, 0.0, 0.0}));
  } else {
    try {
      trace = grape_optimize(obj, start, cfg.grape, [&](const IterationRecord& r) {
        rows.push_back(trace_row(r));
        if (r.iteration % 50 == 0) {
          std::cout << "iteration " << r.iteration << " infidelity=" << format_double(1.0 - r.fidelity) << "\n"
                    << std::flush;
        }
      });
    } catch (const Error&) {
      write_csv(out / "trace.csv", "iteration,fidelity,infidelity,epsilon,gradient_norm", rows);
      throw;
    }
  }
  const double wall = seconds_since(t0);

  write_csv(out / "trace.csv", "iteration,fidelity,infidelity,epsilon,gradient_norm", rows);
  write_json(out / "pulses.json", pulses_to_json(with_pixels(pulses, trace.pixels)));
  summary["fidelity"] = trace.fidelity;
  summary["infidelity"] = 1.0 - trace.fidelity;
  summary["reason"] = trace.reason;
  summary["iterations"] = trace.iterations.empty() ? 0 : trace.iterations.back().iteration;
  write_json(out / "summary.json", summary);
  write_metadata(job, "optimize", {{"wall_s", wall}, {"preparation_s", lookup.loaded ? 0.0 : lookup.seconds}});
  std::cout << "fidelity=" << format_double(trace.fidelity) << " infidelity=" << format_double(1.0 - trace.fidelity)
            << " reason=" << trace.reason << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const Job& job) {
  const auto sys = load_system(job);
  const auto pulses = load_pulses(job, sys);
  const std::size_t order = job.order();
  const double dt = subpixel_width_of(job, pulses);
  const auto cfg = load_optimization(job, sys, pulses[0].duration());
  const Json g = job.has("gradcheck") ? job.section("gradcheck") : Json::object();
  const double step = g.value("step", 1e-6);
  const double threshold = g.value("threshold", 1e-5);
  const auto lookup = obtain_cache(job, sys.model, order, dt, any_linear(pulses));
  ObjectiveOptions oopts;
  oopts.threads = job.threads();
  FidelityObjective obj(lookup.cache, pulses, cfg.target, oopts);
  if (g.contains("mismatched_filter_ghz")) {
    // Negative control: pull gradients back through a different filter.
    std::vector<PulseMaps> maps;
    for (auto p : pulses) {
      p.filter_bandwidth = ghz_to_angular(g["mismatched_filter_ghz"].get<double>());
      maps.push_back(pulse_maps(p));
    }
    obj.override_chain_maps(std::move(maps));
  }
  const PixelSet px = pixels_of(pulses);
  const auto analytic = obj.evaluate(px);
  const auto numeric = finite_difference_gradient(obj, px, step);
  const double err = gradient_relative_error(analytic, numeric);
  Json report;
  report["order"] = order;
  report["fidelity"] = analytic.fidelity;
  report["max_relative_error"] = err;
  report["max_abs_gradient"] = analytic.max_abs();
  report["max_abs_finite_difference"] = numeric.max_abs();
  report["threshold"] = threshold;
  report["passed"] = err <= threshold;
  write_json(job.out_dir() / "gradcheck.json", report);
  std::cout << "fidelity=" << format_double(analytic.fidelity) << "\n";
  std::cout << "max_abs_gradient=" << format_double(analytic.max_abs()) << "\n";
  std::cout << "max_relative_error=" << format_double(err) << "\n";
  std::cout << (err <= threshold ? "PASS" : "FAIL") << "\n";
  return err <= threshold ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dysolve: Dyson-series propagators and pulse optimization for driven quantum systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dysolve 0.1.0");

  std::optional<std::string> config;
  std::optional<std::size_t> order, subpixels;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Job&);
  };
  const Command commands[] = {
      {"model", "write a system model (benchmark ensemble or cross-resonance pair) as JSON", cmd_model},
      {"prepare", "compute and store the Dyson operator cache", cmd_prepare},
      {"propagate", "contract a pulse sequence into the total propagator", cmd_propagate},
      {"benchmark", "error and timing sweep over subpixel counts, orders and drive counts", cmd_benchmark},
      {"optimize", "GRAPE optimization, flat-pulse search or fidelity evaluation", cmd_optimize},
      {"gradcheck", "compare analytic and finite-difference fidelity gradients", cmd_gradcheck},
  };
  std::map<CLI::App*, const Command*> dispatch;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config, "job configuration JSON");
    sub->add_option("--order", order, "truncation order (0..4)");
    sub->add_option("--subpixels", subpixels, "subpixels per pixel");
    sub->add_option("--seed", seed, "random seed for generated systems");
    sub->add_option("--threads", threads, "worker threads (0 = all logical cores)");
    sub->add_option("--out", out, "output directory");
    dispatch[sub] = &c;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  Overrides ov;
  ov.order = order;
  ov.subpixels = subpixels;
  ov.seed = seed;
  ov.threads = threads;
  if (out) ov.out = fs::path(*out);

  for (const auto& [sub, cmd] : dispatch) {
    if (!sub->parsed()) continue;
    try {
      const Job job = load_job(config ? std::optional<fs::path>(*config) : std::nullopt, ov);
      fs::create_directories(job.out_dir());
      return cmd->run(job);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return exit_code(e.kind());
    } catch (const Json::exception& e) {
      std::cerr << "error: ConfigError: " << e.what() << "\n";
      return kExitConfig;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "error: IoError: " << e.what() << "\n";
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitNumeric;
    }
  }
  return kExitConfig;
}

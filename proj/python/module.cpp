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

// Python bindings. Units follow the C++ library: rad/ns and ns.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dysolve/control.hpp"
#include "dysolve/dyson.hpp"
#include "dysolve/models.hpp"
#include "dysolve/oracle.hpp"
#include "dysolve/propagate.hpp"
#include "dysolve/weighting.hpp"

namespace py = pybind11;
using namespace dysolve;

namespace {

SystemModel make_model(std::vector<double> eigenvalues, std::vector<Matrix> dipoles, std::vector<double> carriers) {
  if (dipoles.size() != carriers.size()) throw Error(ErrorKind::LengthMismatch, "one carrier per dipole");
  SystemModel m;
  m.eigenvalues = std::move(eigenvalues);
  for (std::size_t c = 0; c < dipoles.size(); ++c) m.channels.push_back({std::move(dipoles[c]), carriers[c]});
  return validate_system(std::move(m)).model;
}

FrequencyAssignment make_assignment(std::vector<std::uint32_t> channels, std::vector<int> signs) {
  if (channels.size() != signs.size()) throw Error(ErrorKind::InvalidArgument, "channels and signs differ in length");
  return {std::move(channels), std::move(signs)};
}

py::list grads_as_complex(const GradientReport& r) {
  py::list out;
  for (std::size_t c = 0; c < r.grad_x.size(); ++c) {
    Eigen::VectorXcd g(r.grad_x[c].size());
    g.real() = r.grad_x[c];
    g.imag() = r.grad_y[c];
    out.append(g);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dyson-series propagators for driven quantum systems";

  static py::exception<Error> error(m, "DysolveError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("ghz_to_angular", &ghz_to_angular);
  m.def("mhz_to_angular", &mhz_to_angular);
  m.def("angular_to_ghz", &angular_to_ghz);
  m.def("angular_to_mhz", &angular_to_mhz);

  py::class_<SystemModel>(m, "SystemModel")
      .def(py::init(&make_model), py::arg("eigenvalues"), py::arg("dipoles"), py::arg("carriers"),
           "Validated model; levels are sorted ascending.")
      .def_property_readonly("dim", &SystemModel::dim)
      .def_property_readonly("num_channels", &SystemModel::num_channels)
      .def_readonly("eigenvalues", &SystemModel::eigenvalues)
      .def_property_readonly("dipoles",
                             [](const SystemModel& s) {
                               std::vector<Matrix> out;
                               for (const auto& c : s.channels) out.push_back(c.dipole);
                               return out;
                             })
      .def_property_readonly("carriers",
                             [](const SystemModel& s) {
                               std::vector<double> out;
                               for (const auto& c : s.channels) out.push_back(c.carrier);
                               return out;
                             })
      .def_property_readonly("fingerprint", [](const SystemModel& s) { return fingerprint(s); });

  py::enum_<Interpolation>(m, "Interpolation")
      .value("Constant", Interpolation::Constant)
      .value("Linear", Interpolation::Linear);

  py::class_<PulseSpec>(m, "PulseSpec")
      .def(py::init([](std::vector<Complex> pixels, double pixel_width, std::size_t subpixels, double bandwidth,
                       Interpolation interp) {
             PulseSpec p{std::move(pixels), pixel_width, subpixels, bandwidth, interp};
             validate(p);
             return p;
           }),
           py::arg("pixels"), py::arg("pixel_width") = 1.0, py::arg("subpixels_per_pixel") = 1,
           py::arg("filter_bandwidth") = std::numeric_limits<double>::infinity(),
           py::arg("interpolation") = Interpolation::Constant)
      .def_readwrite("pixels", &PulseSpec::pixels)
      .def_readwrite("pixel_width", &PulseSpec::pixel_width)
      .def_readwrite("subpixels_per_pixel", &PulseSpec::subpixels_per_pixel)
      .def_readwrite("filter_bandwidth", &PulseSpec::filter_bandwidth)
      .def_readwrite("interpolation", &PulseSpec::interpolation)
      .def_property_readonly("subpixel_width", &PulseSpec::subpixel_width)
      .def_property_readonly("duration", &PulseSpec::duration);

  py::class_<SubpixelSequence>(m, "SubpixelSequence")
      .def(py::init([](std::vector<Complex> values, double width, std::vector<Complex> intercepts,
                       std::vector<Complex> slopes) {
             return SubpixelSequence{std::move(values), std::move(intercepts), std::move(slopes), width};
           }),
           py::arg("values"), py::arg("subpixel_width"), py::arg("intercepts") = std::vector<Complex>{},
           py::arg("slopes") = std::vector<Complex>{})
      .def_readonly("values", &SubpixelSequence::values)
      .def_readonly("intercepts", &SubpixelSequence::intercepts)
      .def_readonly("slopes", &SubpixelSequence::slopes)
      .def_readonly("subpixel_width", &SubpixelSequence::subpixel_width)
      .def("__len__", &SubpixelSequence::size);

  m.def("subpixel_amplitudes", &subpixel_amplitudes, py::arg("pulse"));
  m.def("filter_matrix", &filter_matrix, py::arg("pulse"));

  m.def(
      "weight", [](const std::vector<Complex>& x) { return weight(std::span<const Complex>(x)); }, py::arg("nodes"),
      "i^n times the n-th divided difference of exp(-ix) on n+1 nodes.");
  m.def(
      "divided_difference_reference", [](const std::vector<Complex>& x) { return divided_difference_reference(std::span<const Complex>(x)); },
      py::arg("nodes"));

  m.def("frobenius_distance", &frobenius_distance);
  m.def("unitarity_defect", &unitarity_defect);
  m.def("drift_propagator", &drift_propagator, py::arg("model"), py::arg("t"));

  m.def(
      "build_dyson_operator",
      [](const SystemModel& model, std::vector<std::uint32_t> channels, std::vector<int> signs, double dt) {
        return build_dyson_operator(model, make_assignment(std::move(channels), std::move(signs)), dt);
      },
      py::arg("model"), py::arg("channels"), py::arg("signs"), py::arg("dt"));
  m.def("expected_entry_count", &expected_entry_count, py::arg("order"), py::arg("num_channels"));

  py::class_<DysonCache>(m, "DysonCache")
      .def_readonly("truncation_order", &DysonCache::truncation_order)
      .def_readonly("subpixel_width", &DysonCache::subpixel_width)
      .def_readonly("dim", &DysonCache::dim)
      .def_readonly("carriers", &DysonCache::carriers)
      .def_readonly("system_fingerprint", &DysonCache::system_fingerprint)
      .def_property_readonly("num_entries", [](const DysonCache& c) { return c.entries.size(); })
      .def_property_readonly("num_slope_entries", [](const DysonCache& c) { return c.slope_entries.size(); })
      .def("entries",
           [](const DysonCache& c) {
             py::list out;
             for (const auto& e : c.entries) out.append(py::make_tuple(e.assignment.channels, e.assignment.signs, e.op));
             return out;
           })
      .def("save", [](const DysonCache& c, const std::filesystem::path& p) { save_cache(c, p); }, py::arg("path"));

  m.def(
      "prepare",
      [](const SystemModel& model, std::size_t order, double dt, bool with_slopes, unsigned threads) {
        py::gil_scoped_release release;
        PrepareOptions o;
        o.with_slopes = with_slopes;
        o.threads = threads;
        return prepare(model, order, dt, o);
      },
      py::arg("model"), py::arg("order"), py::arg("dt"), py::arg("with_slopes") = false, py::arg("threads") = 0);
  m.def("load_cache", py::overload_cast<const std::filesystem::path&>(&load_cache), py::arg("path"));
  m.def("load_cache", py::overload_cast<const std::filesystem::path&, const SystemModel&>(&load_cache),
        py::arg("path"), py::arg("model"));

  m.def(
      "propagate",
      [](const DysonCache& cache, const std::vector<SubpixelSequence>& seqs, unsigned threads) {
        py::gil_scoped_release release;
        ContractionOptions o;
        o.threads = threads;
        return propagate(cache, std::span<const SubpixelSequence>(seqs), o).total;
      },
      py::arg("cache"), py::arg("sequences"), py::arg("threads") = 0);
  m.def(
      "step_unitaries",
      [](const DysonCache& cache, const std::vector<SubpixelSequence>& seqs) {
        return step_unitaries(cache, std::span<const SubpixelSequence>(seqs));
      },
      py::arg("cache"), py::arg("sequences"));

  m.def(
      "reference_propagator",
      [](const SystemModel& model, const std::vector<SubpixelSequence>& seqs, double rel_tol, double abs_tol) {
        py::gil_scoped_release release;
        OracleSettings s;
        s.rel_tol = rel_tol;
        s.abs_tol = abs_tol;
        return reference_propagator(model, std::span<const SubpixelSequence>(seqs), s);
      },
      py::arg("model"), py::arg("sequences"), py::arg("rel_tol") = 1e-12, py::arg("abs_tol") = 1e-12);
  m.def(
      "reference_propagator_continuous",
      [](const SystemModel& model, const std::vector<PulseSpec>& pulses, double rel_tol, double abs_tol) {
        py::gil_scoped_release release;
        OracleSettings s;
        s.rel_tol = rel_tol;
        s.abs_tol = abs_tol;
        return reference_propagator(model, std::span<const PulseSpec>(pulses), s);
      },
      py::arg("model"), py::arg("pulses"), py::arg("rel_tol") = 1e-12, py::arg("abs_tol") = 1e-12);

  m.def(
      "build_benchmark_ensemble",
      [](std::uint64_t seed, std::size_t dim, std::size_t num_drives, double duration_ns, double pixel_width_ns,
         std::size_t subpixels_per_pixel) {
        BenchmarkEnsembleSpec s;
        s.seed = seed;
        s.dim = dim;
        s.num_drives = num_drives;
        s.duration_ns = duration_ns;
        s.pixel_width_ns = pixel_width_ns;
        s.subpixels_per_pixel = subpixels_per_pixel;
        auto inst = build_benchmark_ensemble(s);
        return py::make_tuple(std::move(inst.model), std::move(inst.pulses));
      },
      py::arg("seed") = 0, py::arg("dim") = 25, py::arg("num_drives") = 1, py::arg("duration_ns") = 500.0,
      py::arg("pixel_width_ns") = 1.0, py::arg("subpixels_per_pixel") = 1);

  py::class_<GateTarget>(m, "GateTarget")
      .def(py::init([](Matrix target, std::vector<std::size_t> subspace, std::vector<double> frame_phases) {
             return GateTarget{std::move(target), std::move(subspace), std::move(frame_phases)};
           }),
           py::arg("target"), py::arg("subspace"), py::arg("frame_phases") = std::vector<double>{})
      .def_readwrite("target", &GateTarget::target)
      .def_readwrite("subspace", &GateTarget::subspace)
      .def_readwrite("frame_phases", &GateTarget::frame_phases);

  m.def("named_gate", &named_gate, py::arg("name"));
  m.def("drift_frame_phases", &drift_frame_phases, py::arg("model"), py::arg("subspace"), py::arg("duration"));
  m.def("fidelity", &fidelity, py::arg("u"), py::arg("target"));
  m.def("local_z_corrected_target", &local_z_corrected_target, py::arg("u"), py::arg("target"));

  m.def(
      "build_cross_resonance",
      [](double target_ghz) {
        auto cr = build_cross_resonance(default_cross_resonance_spec(target_ghz));
        return py::make_tuple(std::move(cr.model), std::move(cr.target), cr.target_frequency);
      },
      py::arg("target_ghz") = 4.9, "Returns (model, ZX90 GateTarget, target-qubit carrier in rad/ns).");

  py::class_<FidelityObjective>(m, "FidelityObjective")
      .def(py::init([](const DysonCache& cache, std::vector<PulseSpec> specs, GateTarget target, unsigned threads) {
             ObjectiveOptions o;
             o.threads = threads;
             return FidelityObjective(cache, std::move(specs), std::move(target), o);
           }),
           py::arg("cache"), py::arg("pulses"), py::arg("target"), py::arg("threads") = 0)
      .def("fidelity", &FidelityObjective::fidelity, py::arg("pixels"))
      .def("propagator", &FidelityObjective::propagator, py::arg("pixels"))
      .def(
          "gradient",
          [](const FidelityObjective& obj, const PixelSet& px) {
            const auto r = obj.evaluate(px);
            return py::make_tuple(r.fidelity, grads_as_complex(r));
          },
          py::arg("pixels"), "Returns (fidelity, [dPhi/dRe + i dPhi/dIm per channel]).")
      .def(
          "finite_difference_gradient",
          [](const FidelityObjective& obj, const PixelSet& px, double step) {
            return grads_as_complex(finite_difference_gradient(obj, px, step));
          },
          py::arg("pixels"), py::arg("step") = 1e-6);

  m.def(
      "grape_optimize",
      [](const FidelityObjective& obj, PixelSet pixels, double epsilon, std::size_t max_iters, double tolerance,
         std::optional<double> target_infidelity) {
        GrapeSettings s;
        s.epsilon = epsilon;
        s.max_iters = max_iters;
        s.tolerance = tolerance;
        s.target_infidelity = target_infidelity;
        OptimizationTrace tr;
        {
          py::gil_scoped_release release;
          tr = grape_optimize(obj, std::move(pixels), s);
        }
        std::vector<double> fid;
        for (const auto& r : tr.iterations) fid.push_back(r.fidelity);
        py::dict out;
        out["pixels"] = tr.pixels;
        out["fidelity"] = tr.fidelity;
        out["trace"] = fid;
        out["reason"] = tr.reason;
        return out;
      },
      py::arg("objective"), py::arg("pixels"), py::arg("epsilon") = 0.1, py::arg("max_iters") = 500,
      py::arg("tolerance") = 1e-10, py::arg("target_infidelity") = std::nullopt);
}

# Copyright 2026 The Dysolve Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import cmath
import math

import numpy as np
import pytest

import dysolve

TWO_PI = 2 * math.pi


def qubit():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    return dysolve.SystemModel([0.0, TWO_PI * 5], [sx], [TWO_PI * 5])


def test_weight_closed_forms():
    assert dysolve.weight([0.3]) == pytest.approx(cmath.exp(-0.3j), abs=1e-15)
    assert dysolve.weight([math.pi]) == pytest.approx(-1, abs=1e-15)
    assert dysolve.weight([0.0, math.pi]) == pytest.approx(-2j / math.pi, abs=1e-15)
    nodes = [0.1, -0.4, 2.5, 7, 7]
    assert abs(dysolve.weight(nodes) - dysolve.divided_difference_reference(nodes)) < 1e-13


def test_model_validation():
    m = qubit()
    assert m.dim == 2 and m.num_channels == 1
    with pytest.raises(dysolve.DysolveError):
        dysolve.SystemModel([0.0, 1.0], [np.eye(3, dtype=complex)], [1.0])


def test_prepare_counts_and_cache_round_trip(tmp_path):
    cache = dysolve.prepare(qubit(), 4, 0.05)
    assert cache.num_entries == dysolve.expected_entry_count(4, 1) == 31
    path = tmp_path / "q.dyc"
    cache.save(path)
    again = dysolve.load_cache(path, qubit())
    for (c0, s0, a), (c1, s1, b) in zip(cache.entries(), again.entries()):
        assert c0 == c1 and s0 == s1
        assert np.array_equal(a, b)
    with pytest.raises(dysolve.DysolveError, match="FingerprintMismatch"):
        other = dysolve.SystemModel([0.0, TWO_PI * 5.1], [np.array([[0, 1], [1, 0]], dtype=complex)], [TWO_PI * 5])
        dysolve.load_cache(path, other)


def test_zero_drive_is_drift():
    m = qubit()
    cache = dysolve.prepare(m, 4, 0.1)
    seq = dysolve.SubpixelSequence([0j] * 30, 0.1)
    u = dysolve.propagate(cache, [seq])
    assert np.abs(u - dysolve.drift_propagator(m, 3.0)).max() < 1e-13


def test_propagate_matches_oracle():
    m = qubit()
    pulse = dysolve.PulseSpec([0.05 + 0.02j, 0.1, -0.03j, 0.07], pixel_width=1.0, subpixels_per_pixel=10)
    cache = dysolve.prepare(m, 4, pulse.subpixel_width)
    u = dysolve.propagate_pulses(cache, [pulse])
    ref = dysolve.reference_propagator(m, [dysolve.subpixel_amplitudes(pulse)])
    assert dysolve.frobenius_distance(u, ref) < 1e-8
    assert dysolve.unitarity_defect(u) < 1e-10


def test_gradient_and_grape():
    m = qubit()
    spec = dysolve.PulseSpec([0j] * 10, pixel_width=1.0, subpixels_per_pixel=4)
    cache = dysolve.prepare(m, 4, spec.subpixel_width)
    target = dysolve.GateTarget(dysolve.named_gate("X90"), [0, 1])
    target.frame_phases = dysolve.drift_frame_phases(m, [0, 1], spec.duration)
    obj = dysolve.FidelityObjective(cache, [spec], target)
    pixels = [[0.02 + 0.01j] * 10]
    fid, grad = obj.gradient(pixels)
    fd = obj.finite_difference_gradient(pixels)
    assert fid == pytest.approx(obj.fidelity(pixels))
    assert np.abs(grad[0] - fd[0]).max() < 1e-6 * max(1.0, np.abs(fd[0]).max())
    out = dysolve.grape_optimize(obj, pixels, target_infidelity=1e-4)
    assert 1 - out["fidelity"] < 1e-4
    trace = out["trace"]
    assert all(b >= a - 1e-14 for a, b in zip(trace, trace[1:]))


def test_benchmark_and_cross_resonance_builders():
    m1, p1 = dysolve.build_benchmark_ensemble(seed=3, dim=6, duration_ns=10.0)
    m2, p2 = dysolve.build_benchmark_ensemble(seed=3, dim=6, duration_ns=10.0)
    assert m1.fingerprint == m2.fingerprint
    assert p1[0].pixels == p2[0].pixels
    cr, zx90, wt = dysolve.build_cross_resonance()
    assert zx90.subspace and len(zx90.subspace) == 4
    assert cr.num_channels == 2
    assert dysolve.angular_to_ghz(wt) == pytest.approx(4.9, abs=0.01)
    assert np.allclose(zx90.target @ zx90.target.conj().T, np.eye(4))

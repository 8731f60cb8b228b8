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

"""Dyson-series propagators for driven quantum systems."""

from ._core import *  # noqa: F401,F403
from ._core import DysolveError, __doc__  # noqa: F401

__version__ = "0.1.0"


def propagate_pulses(cache, pulses, threads=0):
    """Propagator for a list of PulseSpec, one per drive channel."""
    return propagate(cache, [subpixel_amplitudes(p) for p in pulses], threads)  # noqa: F405

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

#include <span>
#include <utility>

#include "dysolve/core.hpp"

namespace dysolve {

/// Weighting function of order n = nodes.size() - 1:
///
///   f(x_0..x_n) = sum_{m_0..m_n} prod_j (-i x_j)^{m_j} / (sum_j m_j + n)!
///
/// equivalently the integral of exp(-i sum_j tau_j x_j) over the unit simplex,
/// or i^n times the n-th divided difference of exp(-ix). Symmetric in the nodes.
/// Throws EmptyNodes.
Complex weight(std::span<const Complex> nodes);

/// Real-node convenience overload used by the operator builders.
Complex weight(std::span<const double> nodes);

/// (e^{ia} f(x), f(x - a)). The two components agree for any complex a.
std::pair<Complex, Complex> weight_shift_check(std::span<const Complex> nodes, Complex a);

/// Partial derivative of f with respect to node j: -i f(x with x_j appended).
Complex weight_derivative(std::span<const Complex> nodes, std::size_t j);

/// i^n times the divided difference of exp(-ix), from the confluent
/// divided-difference table evaluated with 100 significant digits.
/// Slow; meant as an independent reference.
Complex divided_difference_reference(std::span<const Complex> nodes);

}  // namespace dysolve

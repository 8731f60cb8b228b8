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

#include "simplex_search.hpp"

#include <exception>
#include <memory>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace dysolve::detail {

namespace {

struct Context {
  const std::function<double(const std::vector<double>&)>* fn;
  std::vector<double> scratch;
  std::exception_ptr failure;
};

double trampoline(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<Context*>(params);
  if (ctx->failure) return GSL_POSINF;
  for (std::size_t i = 0; i < ctx->scratch.size(); ++i) ctx->scratch[i] = gsl_vector_get(v, i);
  try {
    return (*ctx->fn)(ctx->scratch);
  } catch (...) {
    ctx->failure = std::current_exception();
    return GSL_POSINF;
  }
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn, std::vector<double> x0,
                          double initial_step, double size_tol, std::size_t max_iters) {
  const std::size_t n = x0.size();
  SimplexResult result;
  if (n == 0) {
    result.x = x0;
    result.value = fn(x0);
    result.converged = true;
    return result;
  }
  Context ctx{&fn, std::vector<double>(n), nullptr};
  gsl_multimin_function f{&trampoline, n, &ctx};

  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(n), &gsl_vector_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(n), &gsl_vector_free);
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, x0[i]);
  gsl_vector_set_all(step.get(), initial_step);

  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
  gsl_multimin_fminimizer_set(s.get(), &f, x.get(), step.get());

  for (result.iterations = 0; result.iterations < max_iters; ++result.iterations) {
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    if (ctx.failure) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), size_tol) == GSL_SUCCESS) {
      result.converged = true;
      break;
    }
  }
  if (ctx.failure) std::rethrow_exception(ctx.failure);
  result.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.x[i] = gsl_vector_get(s->x, i);
  result.value = s->fval;
  return result;
}

}  // namespace dysolve::detail

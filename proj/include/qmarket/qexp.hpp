// Copyright 2026 The qmarket authors
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

#include <cstdint>
#include <iosfwd>

#include "qmarket/supply.hpp"

namespace qmarket {

/// Tsallis deformed exponential [1 + (1-q)x]^(1/(1-q)). Reduces to e^x inside
/// |q-1| < 1e-8; throws PoleDomainError for q > 1 with (q-1)x >= 1; returns 0
/// past the q < 1 cutoff where the base would go nonpositive.
double q_exponential(double q, double x);

/// Sum of squared residuals of the curve against alpha * exp_q(beta * x) at
/// the half-offset abscissae x_j = j - 1/2, j = 1..N.
double fit_objective(const SupplyCurve& curve, double q, double alpha,
                     double beta);

/// Closed-form optimal scale for fixed (q, beta): the objective is linear in
/// alpha, so alpha* = sum(V_j g_j) / sum(g_j^2) with g_j = exp_q(beta x_j).
/// Throws NoFeasibleAlphaError if no positive alpha exists.
double optimal_alpha(const SupplyCurve& curve, double q, double beta);

struct FitConfig {
  int n_starts = 500;
  int max_refine_iterations = 500;
  double q_min = 0.3;
  double q_max = 1.7;
  double beta_min = 1e-4;   // beta sampled log-uniformly
  double beta_max = 20.0;
  std::uint64_t seed = 0;
};

struct QExpFit {
  double q = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double quadratic_error = 0.0;
  int n_points = 0;
  int starts_used = 0;
  int converged_starts = 0;

  void to_json(std::ostream& out) const;
};

/// Multistart constrained least squares: n_starts (q, beta) samples from the
/// box (q uniform, beta log-uniform), alpha by projection, each start refined
/// by Nelder-Mead in (q, ln beta) with alpha re-projected per evaluation. The
/// pole constraint x_N < 1/(beta(q-1)) for q > 1 is enforced by rejection at
/// sampling and by an infinite barrier during refinement. Winner selection by
/// (objective, start index), so the result is deterministic given the seed
/// and independent of the worker count.
QExpFit fit(const SupplyCurve& curve, const FitConfig& config = {});

namespace serial {
/// Sequential reference; must agree with the parallel fit bit-for-bit.
QExpFit fit(const SupplyCurve& curve, const FitConfig& config = {});
}  // namespace serial

namespace detail {
/// The raw (q, beta) sample for one start index (before refinement); exposed
/// so tests can verify the descent property of the refinement.
struct StartPoint {
  double q = 0.0;
  double beta = 0.0;
};
StartPoint sample_start(const FitConfig& config, int start_index, int n_points);
}  // namespace detail

}  // namespace qmarket

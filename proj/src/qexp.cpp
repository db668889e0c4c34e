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

#include "qmarket/qexp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmarket/errors.hpp"
#include "qmarket/rng.hpp"

namespace qmarket {

namespace {

// Nominal switch band 1e-8; the slack keeps the representable neighbors of
// 1 +/- 1e-8 inside it.
constexpr double kQOneBand = 1.000001e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

double abscissa(int j) { return j + 0.5; }  // j is 0-based: x = (j+1) - 1/2

bool violates_pole(double q, double beta, double x_max) {
  return q > 1.0 && (q - 1.0) * beta * x_max >= 1.0;
}

// Objective with alpha projected out; +inf outside the feasible set. Also
// reports the projected alpha.
double projected_objective(const SupplyCurve& curve, double q, double beta,
                           double* alpha_out) {
  const int n = curve.size();
  if (!(q > 0.0) || !(beta > 0.0) || violates_pole(q, beta, abscissa(n - 1))) {
    return kInf;
  }
  double vg = 0.0, gg = 0.0;
  std::array<double, 64> g_stack;
  std::vector<double> g_heap;
  double* g = nullptr;
  if (n <= static_cast<int>(g_stack.size())) {
    g = g_stack.data();
  } else {
    g_heap.resize(n);
    g = g_heap.data();
  }
  for (int j = 0; j < n; ++j) {
    g[j] = q_exponential(q, beta * abscissa(j));
    vg += curve.values[j] * g[j];
    gg += g[j] * g[j];
  }
  if (!(vg > 0.0) || !(gg > 0.0) || !std::isfinite(gg)) return kInf;
  const double alpha = vg / gg;
  double err = 0.0;
  for (int j = 0; j < n; ++j) {
    const double r = curve.values[j] - alpha * g[j];
    err += r * r;
  }
  if (alpha_out != nullptr) *alpha_out = alpha;
  return err;
}

struct RefineResult {
  double q = 0.0;
  double beta = 0.0;
  double objective = kInf;
  bool converged = false;
};

// Nelder-Mead in (q, ln beta) with the barrier baked into the objective.
RefineResult refine(const SupplyCurve& curve, double q0, double beta0,
                    int max_iterations) {
  using Point = std::array<double, 2>;  // {q, ln beta}
  const auto eval = [&](const Point& p) {
    return projected_objective(curve, p[0], std::exp(p[1]), nullptr);
  };

  std::array<Point, 3> simplex{Point{q0, std::log(beta0)},
                               Point{q0 + 0.05, std::log(beta0)},
                               Point{q0, std::log(beta0) + 0.10}};
  std::array<double, 3> f{eval(simplex[0]), eval(simplex[1]), eval(simplex[2])};

  const auto order = [&] {
    // best..worst by (value, index) for a deterministic tie order
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return f[a] < f[b] || (f[a] == f[b] && a < b);
    });
    if (idx[0] != 0 || idx[1] != 1) {
      const std::array<Point, 3> s = simplex;
      const std::array<double, 3> g = f;
      for (int i = 0; i < 3; ++i) {
        simplex[i] = s[idx[i]];
        f[i] = g[idx[i]];
      }
    }
  };

  RefineResult out;
  order();
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    if (f[0] < kInf && f[2] - f[0] <= 1e-12 * (std::abs(f[0]) + 1e-300)) {
      out.converged = true;
      break;
    }
    const Point centroid{0.5 * (simplex[0][0] + simplex[1][0]),
                         0.5 * (simplex[0][1] + simplex[1][1])};
    const auto blend = [&](double coef) {
      return Point{centroid[0] + coef * (simplex[2][0] - centroid[0]),
                   centroid[1] + coef * (simplex[2][1] - centroid[1])};
    };

    const Point reflected = blend(-1.0);
    const double fr = eval(reflected);
    if (fr < f[0]) {
      const Point expanded = blend(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[2] = expanded;
        f[2] = fe;
      } else {
        simplex[2] = reflected;
        f[2] = fr;
      }
    } else if (fr < f[1]) {
      simplex[2] = reflected;
      f[2] = fr;
    } else {
      const Point contracted = blend(fr < f[2] ? -0.5 : 0.5);
      const double fc = eval(contracted);
      if (fc < std::min(fr, f[2])) {
        simplex[2] = contracted;
        f[2] = fc;
      } else {
        // shrink toward the best vertex
        for (int i = 1; i < 3; ++i) {
          simplex[i] = {0.5 * (simplex[i][0] + simplex[0][0]),
                        0.5 * (simplex[i][1] + simplex[0][1])};
          f[i] = eval(simplex[i]);
        }
      }
    }
    order();
  }

  out.q = simplex[0][0];
  out.beta = std::exp(simplex[0][1]);
  out.objective = f[0];
  return out;
}

void check_fit_args(const SupplyCurve& curve, const FitConfig& config) {
  if (curve.size() < 3) {
    throw std::invalid_argument("fit: need at least 3 points");
  }
  if (config.n_starts < 1) {
    throw std::invalid_argument("fit: n_starts must be >= 1");
  }
  if (!(config.q_min > 0.0) || !(config.q_max > config.q_min) ||
      !(config.beta_min > 0.0) || !(config.beta_max > config.beta_min)) {
    throw std::invalid_argument("fit: bad search box");
  }
}

QExpFit assemble(const SupplyCurve& curve, const FitConfig& config,
                 const RefineResult& best, int converged_starts) {
  if (!std::isfinite(best.objective)) {
    throw FitFailedError("fit: every start was infeasible");
  }
  QExpFit out;
  out.q = best.q;
  out.beta = best.beta;
  projected_objective(curve, best.q, best.beta, &out.alpha);
  out.quadratic_error = fit_objective(curve, out.q, out.alpha, out.beta);
  out.n_points = curve.size();
  out.starts_used = config.n_starts;
  out.converged_starts = converged_starts;
  return out;
}

bool better(const RefineResult& a, int ia, const RefineResult& b, int ib) {
  return a.objective < b.objective || (a.objective == b.objective && ia < ib);
}

}  // namespace

double q_exponential(double q, double x) {
  if (!(q > 0.0)) {
    throw std::invalid_argument("q_exponential: q must be positive");
  }
  if (std::abs(q - 1.0) <= kQOneBand) return std::exp(x);
  const double one_minus_q = 1.0 - q;
  const double base = 1.0 + one_minus_q * x;
  if (q > 1.0 && base <= 0.0) {
    throw PoleDomainError("q_exponential: (q-1)x >= 1 is past the pole");
  }
  if (base <= 0.0) return 0.0;  // q < 1 cutoff
  return std::pow(base, 1.0 / one_minus_q);
}

double fit_objective(const SupplyCurve& curve, double q, double alpha,
                     double beta) {
  double err = 0.0;
  for (int j = 0; j < curve.size(); ++j) {
    const double r = curve.values[j] - alpha * q_exponential(q, beta * abscissa(j));
    err += r * r;
  }
  return err;
}

double optimal_alpha(const SupplyCurve& curve, double q, double beta) {
  double vg = 0.0, gg = 0.0;
  for (int j = 0; j < curve.size(); ++j) {
    const double g = q_exponential(q, beta * abscissa(j));
    vg += curve.values[j] * g;
    gg += g * g;
  }
  if (!(vg > 0.0) || !(gg > 0.0)) {
    throw NoFeasibleAlphaError("optimal_alpha: no positive scale fits the data");
  }
  return vg / gg;
}

namespace detail {

StartPoint sample_start(const FitConfig& config, int start_index, int n_points) {
  CounterRng rng(config.seed, static_cast<std::uint64_t>(start_index));
  const double log_lo = std::log(config.beta_min);
  const double log_hi = std::log(config.beta_max);
  StartPoint p;
  do {
    p.q = config.q_min + (config.q_max - config.q_min) * rng.next_unit();
    p.beta = std::exp(log_lo + (log_hi - log_lo) * rng.next_unit());
  } while (violates_pole(p.q, p.beta, n_points - 0.5));
  return p;
}

}  // namespace detail

QExpFit fit(const SupplyCurve& curve, const FitConfig& config) {
  check_fit_args(curve, config);
  std::vector<RefineResult> results(config.n_starts);

#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < config.n_starts; ++s) {
    const auto start = detail::sample_start(config, s, curve.size());
    results[s] =
        refine(curve, start.q, start.beta, config.max_refine_iterations);
  }

  int best = 0;
  int converged = results[0].converged ? 1 : 0;
  for (int s = 1; s < config.n_starts; ++s) {
    if (results[s].converged) ++converged;
    if (better(results[s], s, results[best], best)) best = s;
  }
  return assemble(curve, config, results[best], converged);
}

namespace serial {

QExpFit fit(const SupplyCurve& curve, const FitConfig& config) {
  check_fit_args(curve, config);
  RefineResult best;
  int best_index = -1;
  int converged = 0;
  for (int s = 0; s < config.n_starts; ++s) {
    const auto start = detail::sample_start(config, s, curve.size());
    const RefineResult r =
        refine(curve, start.q, start.beta, config.max_refine_iterations);
    if (r.converged) ++converged;
    if (best_index < 0 || better(r, s, best, best_index)) {
      best = r;
      best_index = s;
    }
  }
  return assemble(curve, config, best, converged);
}

}  // namespace serial

void QExpFit::to_json(std::ostream& out) const {
  nlohmann::json j;
  j["q"] = q;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["quadratic_error"] = quadratic_error;
  j["n_points"] = n_points;
  j["starts_used"] = starts_used;
  out << j.dump(2) << '\n';
}

}  // namespace qmarket

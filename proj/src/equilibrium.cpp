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

#include "qmarket/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qmarket/errors.hpp"
#include "qmarket/quadrature.hpp"

namespace qmarket {

namespace {

// Weighted Bernstein sum  S(u) = sum_k c_k C(n,k) u^k (1-u)^(n-k)  for
// nonnegative coefficients, by the ratio recurrence started at the endpoint
// nearer to u, so the starting power never underflows to zero. Every term is
// nonnegative, so the summation cannot cancel; terms that underflow along the
// way are genuinely negligible.
double weighted_bernstein(const double* coeffs, int degree, double u) {
  if (u <= 0.0) return coeffs[0];
  if (u >= 1.0) return coeffs[degree];
  if (u <= 0.5) {
    const double ratio = u / (1.0 - u);
    double term = std::pow(1.0 - u, degree);
    double acc = coeffs[0] * term;
    for (int k = 0; k < degree; ++k) {
      term *= ratio * static_cast<double>(degree - k) / static_cast<double>(k + 1);
      acc += coeffs[k + 1] * term;
    }
    return acc;
  }
  const double ratio = (1.0 - u) / u;
  double term = std::pow(u, degree);
  double acc = coeffs[degree] * term;
  for (int k = degree; k > 0; --k) {
    term *= ratio * static_cast<double>(k) / static_cast<double>(degree - k + 1);
    acc += coeffs[k - 1] * term;
  }
  return acc;
}

// Log-slope with pmf endpoints already validated. Closed form obtained by
// differentiating the rank-probability and rank-tail sums in Bernstein form:
// both derivatives collapse so that
//   slope(u) = (N-1) * sum_{k<N-1} probs[k] b_k^(N-2)(u)
//                    / sum_{k<N}   probs[k] b_k^(N-1)(u),
// which is nonnegative whenever the pmf is.
double log_slope_unchecked(double u, const DemandPmf& pmf) {
  const int n = pmf.levels();
  const double* probs = pmf.probs.data();
  const double numer = weighted_bernstein(probs, n - 2, u);
  const double denom = weighted_bernstein(probs, n - 1, u);
  return (n - 1) * numer / denom;
}

// Hermite basis on t in [0, 1].
inline double hermite_value(double t, double width, double p0, double p1,
                            double m0, double m1) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * width * m0 +
         (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * width * m1;
}

inline double hermite_derivative(double t, double width, double p0, double p1,
                                 double m0, double m1) {
  const double t2 = t * t;
  return (6 * t2 - 6 * t) * p0 / width + (3 * t2 - 4 * t + 1) * m0 +
         (-6 * t2 + 6 * t) * p1 / width + (3 * t2 - 2 * t) * m1;
}

}  // namespace

double quantile_log_slope(double v, const DemandPmf& pmf) {
  validate_for_equilibrium(pmf);
  if (pmf.levels() < 2) {
    throw std::invalid_argument("equilibrium needs at least two demand levels");
  }
  if (!(v > 0.0) || !(v < 1.0)) {
    throw std::domain_error("quantile_log_slope: argument must lie in (0, 1)");
  }
  return log_slope_unchecked(v, pmf);
}

EquilibriumStrategy solve_equilibrium(const DemandPmf& pmf, double price_cap,
                                      const SolverOptions& options) {
  validate_for_equilibrium(pmf);
  if (pmf.levels() < 2) {
    throw std::invalid_argument("equilibrium needs at least two demand levels");
  }
  if (!(price_cap > 0.0)) {
    throw std::invalid_argument("price cap must be positive");
  }
  if (options.grid_points < 9 || options.panel_points < 2) {
    throw std::invalid_argument("solver grid too small");
  }

  const int segments = options.grid_points - 1;
  std::vector<double> grid_f(options.grid_points);
  grid_f.front() = 0.0;
  grid_f.back() = 1.0;
  for (int k = 1; k < segments; ++k) {
    grid_f[k] = 0.5 * (1.0 - std::cos(std::numbers::pi * k / segments));
  }

  // Per-segment integrals of the log-slope; the Chebyshev clustering of the
  // grid supplies the endpoint refinement the integrand needs when the pmf
  // puts little mass on an endpoint level.
  const GaussLegendre rule(options.panel_points);
  std::vector<double> segment_integral(segments);
  double min_slope = 0.0;
  for (int k = 0; k < segments; ++k) {
    const double a = grid_f[k];
    const double b = grid_f[k + 1];
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < rule.size(); ++i) {
      const double u = mid + half * rule.nodes()[i];
      const double s = log_slope_unchecked(u, pmf);
      min_slope = std::min(min_slope, s);
      acc += rule.weights()[i] * s;
    }
    segment_integral[k] = acc * half;
  }
  if (min_slope < 0.0) {
    throw NonmonotoneEquilibriumError(
        "quantile log-slope is negative; the bid distribution would not be a "
        "CDF");
  }

  // Suffix sums give the integral from each node to 1 exactly at the nodes.
  std::vector<double> tail(options.grid_points, 0.0);
  long double acc = 0.0L;
  for (int k = segments - 1; k >= 0; --k) {
    acc += segment_integral[k];
    tail[k] = static_cast<double>(acc);
  }

  EquilibriumStrategy strategy;
  strategy.demand_ = pmf;
  strategy.price_cap_ = price_cap;
  strategy.grid_f_ = std::move(grid_f);
  strategy.grid_p_.resize(options.grid_points);
  strategy.grid_slope_.resize(options.grid_points);
  for (int k = 0; k < options.grid_points; ++k) {
    strategy.grid_p_[k] = price_cap * std::exp(-tail[k]);
  }
  strategy.grid_p_.back() = price_cap;  // boundary condition, exactly

  // Exact derivative dp/dv = p(v) * slope(v); Fritsch-Carlson limiting keeps
  // each Hermite segment monotone.
  for (int k = 0; k < options.grid_points; ++k) {
    const double u = strategy.grid_f_[k];
    const double s = (k == 0)                        ? log_slope_unchecked(0.0, pmf)
                     : (k == options.grid_points - 1) ? log_slope_unchecked(1.0, pmf)
                                                      : log_slope_unchecked(u, pmf);
    strategy.grid_slope_[k] = strategy.grid_p_[k] * s;
  }
  for (int k = 0; k < segments; ++k) {
    const double dx = strategy.grid_f_[k + 1] - strategy.grid_f_[k];
    const double secant = (strategy.grid_p_[k + 1] - strategy.grid_p_[k]) / dx;
    if (secant <= 0.0) continue;  // flat segment: slopes already >= 0
    const double a = strategy.grid_slope_[k] / secant;
    const double b = strategy.grid_slope_[k + 1] / secant;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double scale = 3.0 / std::sqrt(r2);
      strategy.grid_slope_[k] = scale * a * secant;
      strategy.grid_slope_[k + 1] = scale * b * secant;
    }
  }
  return strategy;
}

int EquilibriumStrategy::locate(double v) const {
  // Chebyshev spacing inverts in closed form; nudge for rounding.
  const int segments = static_cast<int>(grid_f_.size()) - 1;
  const double t = std::acos(1.0 - 2.0 * v) / std::numbers::pi * segments;
  int k = std::clamp(static_cast<int>(t), 0, segments - 1);
  while (k > 0 && v < grid_f_[k]) --k;
  while (k < segments - 1 && v >= grid_f_[k + 1]) ++k;
  return k;
}

double EquilibriumStrategy::quantile(double v) const {
  if (!(v >= 0.0) || !(v <= 1.0)) {
    throw std::invalid_argument("quantile: fraction must lie in [0, 1]");
  }
  if (v <= 0.0) return grid_p_.front();
  if (v >= 1.0) return grid_p_.back();
  const int k = locate(v);
  const double width = grid_f_[k + 1] - grid_f_[k];
  const double t = (v - grid_f_[k]) / width;
  return hermite_value(t, width, grid_p_[k], grid_p_[k + 1], grid_slope_[k],
                       grid_slope_[k + 1]);
}

double EquilibriumStrategy::cdf(double price) const {
  if (price <= grid_p_.front()) return 0.0;
  if (price >= price_cap_) return 1.0;
  const auto it = std::upper_bound(grid_p_.begin(), grid_p_.end(), price);
  const int k = std::clamp(static_cast<int>(it - grid_p_.begin()) - 1, 0,
                           static_cast<int>(grid_p_.size()) - 2);
  const double width = grid_f_[k + 1] - grid_f_[k];

  // Invert the Hermite cubic on the segment: safeguarded Newton on t.
  double lo = 0.0, hi = 1.0;
  double t = (price - grid_p_[k]) / (grid_p_[k + 1] - grid_p_[k]);
  for (int iter = 0; iter < 64; ++iter) {
    const double value = hermite_value(t, width, grid_p_[k], grid_p_[k + 1],
                                       grid_slope_[k], grid_slope_[k + 1]);
    const double err = value - price;
    if (err > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    const double deriv = hermite_derivative(
        t, width, grid_p_[k], grid_p_[k + 1], grid_slope_[k], grid_slope_[k + 1]);
    double next = (deriv > 0.0) ? t - err / (deriv * width) : 0.5 * (lo + hi);
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) < 1e-16) {
      t = next;
      break;
    }
    t = next;
  }
  return grid_f_[k] + t * width;
}

double EquilibriumStrategy::sample_bid(CounterRng& rng) const {
  return quantile(rng.next_unit());
}

void EquilibriumStrategy::to_json(std::ostream& out) const {
  nlohmann::json j;
  j["n"] = demand_.levels();
  j["price_cap"] = price_cap_;
  j["support_floor"] = support_floor();
  j["pi"] = demand_.probs;
  j["grid_f"] = grid_f_;
  j["grid_p"] = grid_p_;
  out << j.dump(2) << '\n';
}

}  // namespace qmarket

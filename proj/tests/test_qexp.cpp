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

#include <cmath>
#include <vector>

#include <doctest.h>
#include <omp.h>

#include "qmarket/errors.hpp"
#include "qmarket/qexp.hpp"

using namespace qmarket;

namespace {

SupplyCurve curve_from(std::vector<double> values) {
  SupplyCurve curve;
  curve.values = std::move(values);
  curve.std_errors.assign(curve.values.size(), 0.0);
  curve.n_units = curve.size();
  return curve;
}

SupplyCurve synthetic(int n, double q, double alpha, double beta) {
  SupplyCurve curve;
  for (int j = 1; j <= n; ++j) {
    curve.values.push_back(alpha * q_exponential(q, beta * (j - 0.5)));
  }
  curve.std_errors.assign(n, 0.0);
  curve.n_units = n;
  return curve;
}

}  // namespace

TEST_CASE("q_exponential: closed-form spot values") {
  for (double q : {0.4, 1.0, 1.3}) CHECK(q_exponential(q, 0.0) == 1.0);
  CHECK(q_exponential(1.0, 2.5) == std::exp(2.5));
  CHECK(q_exponential(2.0, 0.5) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(q_exponential(0.5, 1.0) == doctest::Approx(2.25).epsilon(1e-14));
}

TEST_CASE("q_exponential: pole and argument errors") {
  CHECK_THROWS_AS(q_exponential(2.0, 1.0), PoleDomainError);
  CHECK_THROWS_AS(q_exponential(1.5, 2.5), PoleDomainError);
  CHECK_THROWS_AS(q_exponential(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(q_exponential(-1.0, 1.0), std::invalid_argument);
  // below the q<1 cutoff the deformed exponential vanishes
  CHECK(q_exponential(0.5, -3.0) == 0.0);
}

TEST_CASE("q_exponential: continuous through q = 1") {
  for (double x : {-20.0, -3.0, 0.0, 1.0, 12.5, 20.0}) {
    CHECK(std::abs(q_exponential(1.0 + 1e-8, x) - std::exp(x)) < 1e-6);
    CHECK(std::abs(q_exponential(1.0 - 1e-8, x) - std::exp(x)) < 1e-6);
    // just outside the switch band the true formula is still close
    CHECK(q_exponential(1.0 + 2e-8, x) ==
          doctest::Approx(std::exp(x)).epsilon(1e-5));
    CHECK(q_exponential(1.0 - 2e-8, x) ==
          doctest::Approx(std::exp(x)).epsilon(1e-5));
  }
}

TEST_CASE("objective: zero residual on exactly generated data") {
  const SupplyCurve curve = synthetic(6, 0.9, 2.0, 0.7);
  CHECK(fit_objective(curve, 0.9, 2.0, 0.7) <= 1e-18);
}

TEST_CASE("objective: expansion for a flat two-point curve") {
  // V = (1,1), alpha = 1, q = 1: the objective is
  // (1 - e^{beta/2})^2 + (1 - e^{3 beta/2})^2.
  const SupplyCurve curve = curve_from({1.0, 1.0});
  const double beta = 0.1;
  const double expected = std::pow(1.0 - std::exp(beta / 2), 2) +
                          std::pow(1.0 - std::exp(3 * beta / 2), 2);
  CHECK(fit_objective(curve, 1.0, 1.0, beta) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(0.0288191).epsilon(1e-4));
}

TEST_CASE("objective: abscissae are the half-offsets") {
  // hand computation at N=3, q=1, alpha=1, beta=1 against x = 1/2, 3/2, 5/2
  const SupplyCurve curve = curve_from({0.0, 0.0, 0.0});
  const double expected = std::exp(1.0) + std::exp(3.0) + std::exp(5.0);
  CHECK(fit_objective(curve, 1.0, 1.0, 1.0) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("objective propagates the pole error") {
  const SupplyCurve curve = curve_from({1.0, 1.0, 1.0});
  CHECK_THROWS_AS(fit_objective(curve, 1.5, 1.0, 1.0), PoleDomainError);
}

TEST_CASE("optimal_alpha: projection recovers scales") {
  const SupplyCurve g = synthetic(5, 0.8, 1.0, 0.6);
  CHECK(optimal_alpha(g, 0.8, 0.6) == doctest::Approx(1.0).epsilon(1e-14));

  SupplyCurve scaled = g;
  for (double& v : scaled.values) v *= 2.5;
  CHECK(optimal_alpha(scaled, 0.8, 0.6) == doctest::Approx(2.5).epsilon(1e-14));

  // doubling is exact in floating point
  SupplyCurve doubled = g;
  for (double& v : doubled.values) v *= 2.0;
  CHECK(optimal_alpha(doubled, 0.8, 0.6) == 2.0 * optimal_alpha(g, 0.8, 0.6));

  SupplyCurve negative = curve_from({-1.0, -2.0, -3.0});
  CHECK_THROWS_AS(optimal_alpha(negative, 0.8, 0.6), NoFeasibleAlphaError);
}

TEST_CASE("fit: recovers the parameters of noiseless data") {
  const SupplyCurve curve = synthetic(5, 0.863233, 2.9002, 0.823226);
  FitConfig config;
  config.n_starts = 100;
  config.seed = 11;
  const QExpFit result = fit(curve, config);
  CHECK(result.quadratic_error < 1e-10);
  CHECK(std::abs(result.q - 0.863233) < 1e-3);
  CHECK(result.n_points == 5);
  CHECK(result.starts_used == 100);
  CHECK(result.converged_starts > 0);
}

TEST_CASE("fit: validation errors") {
  FitConfig config;
  CHECK_THROWS_AS(fit(curve_from({1.0, 2.0}), config), std::invalid_argument);
  config.n_starts = 0;
  CHECK_THROWS_AS(fit(curve_from({1.0, 2.0, 3.0}), config), std::invalid_argument);
  config.n_starts = 10;
  config.seed = 3;
  CHECK_THROWS_AS(fit(curve_from({-1.0, -2.0, -3.0}), config), FitFailedError);
}

TEST_CASE("fit: never violates the pole constraint when q > 1") {
  const SupplyCurve curve = synthetic(5, 1.09464, 0.206346, 0.848798);
  FitConfig config;
  config.n_starts = 200;
  config.seed = 21;
  const QExpFit result = fit(curve, config);
  CHECK(result.q > 1.0);
  CHECK((result.q - 1.0) * result.beta * (5 - 0.5) < 1.0);
  CHECK(std::abs(result.q - 1.09464) < 1e-3);
}

TEST_CASE("fit: refinement never loses to its own raw starts") {
  const SupplyCurve curve = synthetic(7, 0.95, 1.4, 0.5);
  FitConfig config;
  config.n_starts = 60;
  config.seed = 8;
  const QExpFit result = fit(curve, config);
  for (int s = 0; s < config.n_starts; ++s) {
    const auto start = detail::sample_start(config, s, curve.size());
    const double alpha = optimal_alpha(curve, start.q, start.beta);
    CHECK(result.quadratic_error <=
          fit_objective(curve, start.q, alpha, start.beta) + 1e-18);
  }
}

TEST_CASE("fit: quadrupling the starts never worsens the objective") {
  // starts are indexed substreams, so a larger run replays the smaller one
  const SupplyCurve curve = synthetic(6, 1.05, 0.5, 0.4);
  FitConfig small;
  small.n_starts = 125;
  small.seed = 5;
  FitConfig large = small;
  large.n_starts = 500;
  CHECK(fit(curve, large).quadratic_error <=
        fit(curve, small).quadratic_error + 1e-18);
}

TEST_CASE("fit: serial reference and thread count do not change the result") {
  const SupplyCurve curve = synthetic(5, 0.9, 1.0, 0.8);
  FitConfig config;
  config.n_starts = 80;
  config.seed = 14;

  const QExpFit par = fit(curve, config);
  const QExpFit ser = serial::fit(curve, config);
  CHECK(par.q == ser.q);
  CHECK(par.alpha == ser.alpha);
  CHECK(par.beta == ser.beta);
  CHECK(par.quadratic_error == ser.quadratic_error);
  CHECK(par.converged_starts == ser.converged_starts);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const QExpFit one = fit(curve, config);
  omp_set_num_threads(4);
  const QExpFit four = fit(curve, config);
  omp_set_num_threads(saved);
  CHECK(one.q == four.q);
  CHECK(one.alpha == four.alpha);
  CHECK(one.beta == four.beta);
  CHECK(one.quadratic_error == four.quadratic_error);
}

TEST_CASE("fit: reported error equals the objective recomputed at the optimum") {
  const SupplyCurve curve = synthetic(5, 0.88, 2.0, 0.6);
  FitConfig config;
  config.n_starts = 50;
  config.seed = 2;
  const QExpFit result = fit(curve, config);
  const double recomputed =
      fit_objective(curve, result.q, result.alpha, result.beta);
  CHECK(result.quadratic_error ==
        doctest::Approx(recomputed).epsilon(1e-12));
}

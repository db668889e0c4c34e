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

#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "qmarket/clearing.hpp"
#include "qmarket/demand.hpp"
#include "qmarket/equilibrium.hpp"
#include "qmarket/errors.hpp"

using namespace qmarket;

namespace {

// --- independent oracles -------------------------------------------------
//
// The implementation evaluates one algebraically reduced expression; these
// oracles build the log-slope from its definition instead: the demand-weighted
// rank probability  h(u) = sum_i pi_i P[Bin(N-1, u) = i-1]  and rank tail
// g(u) = sum_i pi_i P[Bin(N-1, u) >= i-1], combined as (g' - h') / h.

double log_binom(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double binom_pmf(int n, int k, double u) {
  return std::exp(log_binom(n, k) + k * std::log(u) + (n - k) * std::log1p(-u));
}

double rank_pmf_mix(const DemandPmf& pmf, double u) {
  const int n = pmf.levels();
  double acc = 0.0;
  for (int i = 1; i <= n; ++i) acc += pmf.probs[i - 1] * binom_pmf(n - 1, i - 1, u);
  return acc;
}

double rank_tail_mix(const DemandPmf& pmf, double u) {
  const int n = pmf.levels();
  double acc = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int k = i - 1; k <= n - 1; ++k) {
      acc += pmf.probs[i - 1] * binom_pmf(n - 1, k, u);
    }
  }
  return acc;
}

double slope_by_finite_differences(const DemandPmf& pmf, double u) {
  const double step = 1e-6;
  const double dh =
      (rank_pmf_mix(pmf, u + step) - rank_pmf_mix(pmf, u - step)) / (2 * step);
  const double dg =
      (rank_tail_mix(pmf, u + step) - rank_tail_mix(pmf, u - step)) / (2 * step);
  return (dg - dh) / rank_pmf_mix(pmf, u);
}

// Same reduced expression as the implementation but with each Bernstein term
// built from log-binomial coefficients instead of the ratio recurrence.
double slope_by_log_binomials(const DemandPmf& pmf, double u) {
  const int n = pmf.levels();
  double numer = 0.0, denom = 0.0;
  for (int k = 0; k <= n - 2; ++k) numer += pmf.probs[k] * binom_pmf(n - 2, k, u);
  for (int k = 0; k <= n - 1; ++k) denom += pmf.probs[k] * binom_pmf(n - 1, k, u);
  return (n - 1) * numer / denom;
}

}  // namespace

TEST_CASE("log-slope is N-1 for uniform demand") {
  for (int n : {2, 3, 5, 17, 30}) {
    const DemandPmf pmf = discretize(BackgroundDistribution::uniform(), n);
    for (double u : {0.1, 0.5, 0.9}) {
      CHECK(quantile_log_slope(u, pmf) ==
            doctest::Approx(n - 1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("log-slope closed form for two firms") {
  // For N=2 the slope reduces to p1 / (p1 + (p2 - p1) u).
  const DemandPmf even{{0.5, 0.5}};
  for (double u : {0.05, 0.4, 0.95}) {
    CHECK(quantile_log_slope(u, even) == doctest::Approx(1.0).epsilon(1e-13));
  }
  const DemandPmf skew{{0.25, 0.75}};
  for (double u : {1e-9, 0.25, 0.8}) {
    const double expected = 0.25 / (0.25 + 0.5 * u);
    CHECK(quantile_log_slope(u, skew) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("log-slope matches finite differences of its defining sums") {
  const std::vector<DemandPmf> pmfs = {
      discretize(BackgroundDistribution::power_left(2.0), 5),
      discretize(BackgroundDistribution::power_right(2.0), 8),
      discretize(BackgroundDistribution::piecewise_constant(
                     {0.0, 0.3, 0.7, 1.0}, {2.0, 0.2, 1.3}),
                 12),
      DemandPmf{{0.4, 0.0, 0.0, 0.6}},  // interior zeros are fine
  };
  for (const auto& pmf : pmfs) {
    for (double u = 0.05; u < 1.0; u += 0.1) {
      const double got = quantile_log_slope(u, pmf);
      CHECK(got == doctest::Approx(slope_by_finite_differences(pmf, u))
                       .epsilon(1e-5));
      CHECK(got == doctest::Approx(slope_by_log_binomials(pmf, u))
                       .epsilon(1e-11));
    }
  }
}

TEST_CASE("log-slope spot values for the cubic-left pmf") {
  // Frozen from the reduced closed form evaluated by independent quadrature
  // tooling: pmf = (1,7,19,37,61)/125.
  const DemandPmf pmf = discretize(BackgroundDistribution::power_left(2.0), 5);
  CHECK(quantile_log_slope(0.1, pmf) == doctest::Approx(3.170212765957).epsilon(1e-10));
  CHECK(quantile_log_slope(0.5, pmf) == doctest::Approx(2.636363636364).epsilon(1e-10));
  CHECK(quantile_log_slope(0.9, pmf) == doctest::Approx(2.455950540958).epsilon(1e-10));
}

TEST_CASE("log-slope domain and validation errors") {
  const DemandPmf pmf = discretize(BackgroundDistribution::uniform(), 4);
  CHECK_THROWS_AS(quantile_log_slope(0.0, pmf), std::domain_error);
  CHECK_THROWS_AS(quantile_log_slope(1.0, pmf), std::domain_error);
  CHECK_THROWS_AS(quantile_log_slope(-0.1, pmf), std::domain_error);
  CHECK_THROWS_AS(quantile_log_slope(1.1, pmf), std::domain_error);
  CHECK_THROWS_AS(quantile_log_slope(0.5, DemandPmf{{0.0, 1.0}}),
                  UnsupportedDemandError);
}

TEST_CASE("solve: uniform demand matches the exponential closed form") {
  for (int n : {2, 5, 17, 30}) {
    const DemandPmf pmf = discretize(BackgroundDistribution::uniform(), n);
    const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double v = i / 2000.0;
      const double expected = 100.0 * std::exp(-(n - 1.0) * (1.0 - v));
      worst = std::max(worst,
                       std::abs(s.quantile(v) - expected) / expected);
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("solve: stays finite and exact out to 64 demand levels") {
  // the Bernstein recurrence must not underflow at grid nodes near u = 1
  const int n = 64;
  const DemandPmf pmf = discretize(BackgroundDistribution::uniform(), n);
  const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
  double worst = 0.0;
  for (int i = 0; i <= 500; ++i) {
    const double v = i / 500.0;
    const double expected = 100.0 * std::exp(-(n - 1.0) * (1.0 - v));
    worst = std::max(worst, std::abs(s.quantile(v) - expected) / expected);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("solve: support floor for two even firms is cap/e") {
  const EquilibriumStrategy s = solve_equilibrium(DemandPmf{{0.5, 0.5}}, 100.0);
  CHECK(s.support_floor() == doctest::Approx(100.0 / std::exp(1.0)).epsilon(1e-10));
}

TEST_CASE("solve: quantile hits the cap exactly at one") {
  const auto pmf = discretize(BackgroundDistribution::power_right(2.0), 7);
  const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
  CHECK(s.quantile(1.0) == 100.0);
  CHECK(s.support_floor() > 0.0);
  CHECK(s.support_floor() < 100.0);
}

TEST_CASE("solve: doubling the quadrature grid barely moves the floor") {
  for (const auto& pmf :
       {discretize(BackgroundDistribution::uniform(), 5),
        discretize(BackgroundDistribution::power_left(2.0), 5)}) {
    const EquilibriumStrategy coarse = solve_equilibrium(pmf, 100.0);
    SolverOptions fine_options;
    fine_options.grid_points = 8193;
    const EquilibriumStrategy fine = solve_equilibrium(pmf, 100.0, fine_options);
    CHECK(std::abs(coarse.support_floor() - fine.support_floor()) /
              fine.support_floor() <
          1e-9);
  }
}

TEST_CASE("solve rejects invalid inputs") {
  CHECK_THROWS_AS(solve_equilibrium(DemandPmf{{0.0, 1.0}}, 100.0),
                  UnsupportedDemandError);
  CHECK_THROWS_AS(solve_equilibrium(DemandPmf{{1.0, 0.0}}, 100.0),
                  UnsupportedDemandError);
  CHECK_THROWS_AS(
      solve_equilibrium(discretize(BackgroundDistribution::uniform(), 3), 0.0),
      std::invalid_argument);
}

TEST_CASE("solve refuses a pmf that would break monotonicity") {
  // A raw pmf with a negative interior entry (invalid by construction, but
  // endpoint validation cannot see it) drives the slope negative somewhere.
  CHECK_THROWS_AS(solve_equilibrium(DemandPmf{{0.6, -0.2, 0.6}}, 100.0),
                  NonmonotoneEquilibriumError);
}

TEST_CASE("cdf: closed-form check and clamping") {
  const DemandPmf pmf = discretize(BackgroundDistribution::uniform(), 5);
  const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
  CHECK(s.cdf(100.0 * std::exp(-2.0)) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s.cdf(100.0) == 1.0);
  CHECK(s.cdf(s.support_floor()) == 0.0);
  CHECK(s.cdf(s.support_floor() - 1.0) == 0.0);
  CHECK(s.cdf(120.0) == 1.0);
}

TEST_CASE("cdf(quantile(v)) round-trips on a 1001-point grid") {
  for (const auto& pmf :
       {discretize(BackgroundDistribution::uniform(), 5),
        discretize(BackgroundDistribution::power_right(2.0), 9)}) {
    const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
    for (int i = 0; i <= 1000; ++i) {
      const double v = i / 1000.0;
      CHECK(s.cdf(s.quantile(v)) == doctest::Approx(v).epsilon(1e-8));
    }
    for (int i = 0; i <= 1000; ++i) {
      const double p =
          s.support_floor() + (s.price_cap() - s.support_floor()) * i / 1000.0;
      CHECK(s.quantile(s.cdf(p)) == doctest::Approx(p).epsilon(1e-8));
    }
  }
}

TEST_CASE("sample_bid: inverse transform endpoints and determinism") {
  const DemandPmf pmf = discretize(BackgroundDistribution::uniform(), 5);
  const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
  CHECK(s.quantile(1.0) == 100.0);  // a draw forced to 1 returns the cap
  CounterRng a(77), b(77);
  for (int i = 0; i < 1000; ++i) {
    CHECK(s.sample_bid(a) == s.sample_bid(b));
  }
}

TEST_CASE("sample_bid: Kolmogorov-Smirnov against the analytic CDF") {
  const int n = 5;
  const DemandPmf pmf = discretize(BackgroundDistribution::uniform(), n);
  const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
  const long draws = 1000000;
  std::vector<double> bids(draws);
  CounterRng rng(4242);
  for (long i = 0; i < draws; ++i) bids[i] = s.sample_bid(rng);
  std::sort(bids.begin(), bids.end());
  // analytic CDF for uniform demand: F(p) = 1 + ln(p/cap)/(N-1)
  double ks = 0.0;
  for (long i = 0; i < draws; ++i) {
    const double f = 1.0 + std::log(bids[i] / 100.0) / (n - 1.0);
    ks = std::max(ks, std::abs(f - (i + 0.5) / draws));
  }
  CHECK(ks < 1.95 / std::sqrt(double(draws)));
}

// --- pure-bid profit (market-clearing over the equilibrium strategy) ------

TEST_CASE("pure-bid profit: forced dispatch pays the bid itself") {
  const EquilibriumStrategy s = solve_equilibrium(DemandPmf{{0.5, 0.5}}, 100.0);
  const DemandPmf unit_demand{{1.0, 0.0}};
  const double bid = 0.5 * s.support_floor();
  const ProfitEstimate est =
      expected_profit_of_pure_bid(bid, 1, s, unit_demand, 200, 9);
  CHECK(est.mean == doctest::Approx(bid).epsilon(1e-12));
  CHECK(est.std_error == doctest::Approx(0.0));
}

TEST_CASE("pure-bid profit: argument validation") {
  const EquilibriumStrategy s = solve_equilibrium(DemandPmf{{0.5, 0.5}}, 100.0);
  const DemandPmf pmf{{0.5, 0.5}};
  CHECK_THROWS_AS(expected_profit_of_pure_bid(101.0, 1, s, pmf, 10, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(expected_profit_of_pure_bid(-1.0, 1, s, pmf, 10, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(expected_profit_of_pure_bid(50.0, 1, s, pmf, 0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(expected_profit_of_pure_bid(50.0, 2, s, pmf, 10, 1),
                  std::invalid_argument);
}

TEST_CASE("pure-bid profit: two bids inside the support earn the same") {
  const int n = 5;
  const DemandPmf pmf = discretize(BackgroundDistribution::uniform(), n);
  const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
  const long trials = 200000;
  // shared seed = shared rival bids and demands, so the difference of the
  // two estimates is far less noisy than either alone
  const ProfitEstimate a =
      expected_profit_of_pure_bid(s.quantile(0.5), n - 1, s, pmf, trials, 321);
  const ProfitEstimate b =
      expected_profit_of_pure_bid(s.quantile(0.9), n - 1, s, pmf, trials, 321);
  const double combined = std::hypot(a.std_error, b.std_error);
  CHECK(std::abs(a.mean - b.mean) < 3.0 * combined);
}

TEST_CASE("pure-bid profit: serial reference agrees with the blocked kernel") {
  const int n = 4;
  const DemandPmf pmf = discretize(BackgroundDistribution::power_left(2.0), n);
  const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
  const ProfitEstimate par =
      expected_profit_of_pure_bid(40.0, n - 1, s, pmf, 50000, 5);
  const ProfitEstimate ser =
      serial::expected_profit_of_pure_bid(40.0, n - 1, s, pmf, 50000, 5);
  CHECK(par.mean == doctest::Approx(ser.mean).epsilon(1e-10));
  CHECK(par.std_error == doctest::Approx(ser.std_error).epsilon(1e-8));
}

TEST_CASE("continuous strategies essentially never tie") {
  const DemandPmf pmf = discretize(BackgroundDistribution::uniform(), 5);
  const EquilibriumStrategy s = solve_equilibrium(pmf, 100.0);
  CounterRng rng(2718);
  const int trials = 100000;
  int ties = 0;
  std::vector<double> prices;
  for (int t = 0; t < trials; ++t) {
    prices.clear();
    for (int i = 0; i < 10; ++i) prices.push_back(s.sample_bid(rng));
    std::sort(prices.begin(), prices.end());
    if (std::adjacent_find(prices.begin(), prices.end()) != prices.end()) ++ties;
  }
  CHECK(ties / double(trials) < 1e-3);
}

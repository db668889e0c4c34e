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
#include <vector>

#include "qmarket/demand.hpp"
#include "qmarket/rng.hpp"

namespace qmarket {

class EquilibriumStrategy;

struct SolverOptions {
  int grid_points = 4097;  // quantile nodes, clustered toward 0 and 1
  int panel_points = 64;   // Gauss-Legendre points per grid interval
};

/// Solve the equilibrium for the given demand pmf and price cap by
/// integrating the separated quantile ODE:  p(v) = cap * exp(-I(v)) with
/// I(v) the integral of the log-slope over [v, 1]. Deterministic and
/// single-threaded.
EquilibriumStrategy solve_equilibrium(const DemandPmf& pmf, double price_cap,
                                      const SolverOptions& options = {});

/// Symmetric mixed-strategy equilibrium of the unit-capacity zero-cost
/// reverse auction, stored as the quantile map p(v) on v in [0, 1] with
/// p(0) = support_floor and p(1) = price_cap. Immutable after solve; safe to
/// share read-only across threads, each sampler owning its rng state.
class EquilibriumStrategy {
 public:
  double price_cap() const { return price_cap_; }
  double support_floor() const { return grid_p_.front(); }
  const DemandPmf& demand() const { return demand_; }
  int grid_size() const { return static_cast<int>(grid_f_.size()); }
  const std::vector<double>& grid_fractions() const { return grid_f_; }
  const std::vector<double>& grid_prices() const { return grid_p_; }

  /// Price at cumulative probability v in [0, 1] (monotone cubic Hermite
  /// between stored nodes).
  double quantile(double v) const;

  /// Inverse of quantile; clamps to 0 below the support floor and to 1 above
  /// the price cap.
  double cdf(double price) const;

  /// Inverse-transform sample: quantile of a uniform draw from (0, 1).
  double sample_bid(CounterRng& rng) const;

  void to_json(std::ostream& out) const;

 private:
  friend EquilibriumStrategy solve_equilibrium(const DemandPmf&, double,
                                               const SolverOptions&);

  DemandPmf demand_;
  double price_cap_ = 0.0;
  std::vector<double> grid_f_;      // quantile grid, Chebyshev-clustered
  std::vector<double> grid_p_;      // prices at the grid nodes
  std::vector<double> grid_slope_;  // dp/dv at the nodes (limited)

  int locate(double v) const;
};

/// Log-slope of the equilibrium quantile map: d(ln p)/dv evaluated at
/// v = F(p) in (0, 1). This is the integrand whose cumulative integral from v
/// to 1 gives ln(price_cap / p(v)). Throws std::domain_error outside (0, 1)
/// and UnsupportedDemandError if the pmf endpoints carry no mass.
double quantile_log_slope(double v, const DemandPmf& pmf);

}  // namespace qmarket

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

#include "qmarket/equilibrium.hpp"

namespace qmarket {

/// Averaged ascending-sorted bid vector: values[j-1] is the mean j-th lowest
/// of n_units equilibrium bids, with per-component Monte Carlo standard
/// errors (all zero for the exact oracle).
struct SupplyCurve {
  std::vector<double> values;
  std::vector<double> std_errors;
  int n_units = 0;
  long trials = 0;        // 0 for the exact oracle
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(values.size()); }
};

/// Monte Carlo estimate over `trials` rounds: each round draws n_units bids
/// from the strategy, sorts them ascending, and the rounds are averaged
/// componentwise. Per-trial substreams derive from (seed, trial) and
/// accumulation runs over fixed-size blocks in trial order, so the output is
/// bit-identical for any worker count.
SupplyCurve simulate(const EquilibriumStrategy& strategy, long trials,
                     std::uint64_t seed);

namespace serial {
/// Sequential reference with naive running sums; kept for testing the
/// parallel kernel.
SupplyCurve simulate(const EquilibriumStrategy& strategy, long trials,
                     std::uint64_t seed);
}  // namespace serial

/// Exact expected order statistics of n_units i.i.d. draws from the
/// strategy: values[j-1] = integral of quantile(u) against the
/// Beta(j, n_units-j+1) density, by per-grid-segment Gauss-Legendre
/// quadrature with log-gamma Beta normalization.
SupplyCurve exact_curve(const EquilibriumStrategy& strategy, int n_units);

struct CompareReport {
  std::vector<double> z_scores;
  bool pass = false;  // all |z| <= 3
};

/// Componentwise z-scores (mc - exact) / mc.std_error.
CompareReport compare(const SupplyCurve& mc, const SupplyCurve& exact);

/// CSV schema: header "j,V,se", one row per component. Doubles are written
/// in shortest round-trip form, so read_curve_csv(write_curve_csv(c))
/// restores the values bit-for-bit.
void write_curve_csv(const SupplyCurve& curve, std::ostream& out);
SupplyCurve read_curve_csv(std::istream& in);

}  // namespace qmarket

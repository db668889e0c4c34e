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
#include "qmarket/equilibrium.hpp"
#include "qmarket/rng.hpp"

namespace qmarket {

struct AffineCost {
  double slope = 0.0;      // per-unit marginal cost
  double intercept = 0.0;  // fixed component, charged when dispatched

  double operator()(double quantity) const {
    return slope * quantity + intercept;
  }
};

struct GeneratingUnit {
  int owner = 0;           // firm index, >= 0
  double capacity = 1.0;   // units per day, > 0
  AffineCost cost;
};

struct Bid {
  GeneratingUnit unit;
  double price = 0.0;
};

/// Sealed bids, one per generating unit, each price within [0, price_cap].
class BidBook {
 public:
  explicit BidBook(double price_cap);

  void add_bid(const GeneratingUnit& unit, double price);

  const std::vector<Bid>& bids() const { return bids_; }
  double price_cap() const { return price_cap_; }
  double total_capacity() const { return total_capacity_; }
  int firm_count() const { return max_owner_ + 1; }

 private:
  double price_cap_;
  double total_capacity_ = 0.0;
  int max_owner_ = -1;
  std::vector<Bid> bids_;
};

/// Price-nondecreasing order of bid indices: order[r] is the bid at rank r.
struct Ranking {
  std::vector<std::size_t> order;
};

struct DispatchResult {
  std::vector<double> quantities;  // by bid index
  double clearing_price = 0.0;
  int marginal_rank = 0;           // 1-based rank of the marginal unit
  std::vector<double> utilities;   // by firm index

  void to_json(std::ostream& out) const;
};

/// Number of price-compatible rankings: the product of factorials of the
/// equal-price class sizes. Throws std::overflow_error if it exceeds 64 bits.
std::uint64_t count_rankings(const BidBook& book);

/// Uniform draw over the price-compatible rankings (independent
/// Fisher-Yates shuffle inside each equal-price class).
Ranking draw_ranking(const BidBook& book, CounterRng& rng);

/// Dispatch demand d through the ranking: every unit ranked before the
/// marginal one supplies full capacity, the marginal unit supplies the
/// remainder, and all dispatched electricity is paid the marginal unit's bid.
/// Firm utilities are revenue minus own cost of the dispatched quantities.
DispatchResult clear(const BidBook& book, const Ranking& ranking, double demand);

struct ProfitEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo expected utility of bidding `price` against `n_rivals` firms
/// that draw bids from `strategy`, with demand drawn from `pmf`
/// (pmf.levels() must equal n_rivals + 1) and each trial cleared through
/// draw_ranking + clear on the unit-capacity zero-cost market. Per-trial
/// substreams derive from (seed, trial), so the result is bit-identical for
/// any worker count.
ProfitEstimate expected_profit_of_pure_bid(double price, int n_rivals,
                                           const EquilibriumStrategy& strategy,
                                           const DemandPmf& pmf, long trials,
                                           std::uint64_t seed);

namespace serial {
/// Sequential reference with naive running sums; kept for testing the
/// parallel kernel.
ProfitEstimate expected_profit_of_pure_bid(double price, int n_rivals,
                                           const EquilibriumStrategy& strategy,
                                           const DemandPmf& pmf, long trials,
                                           std::uint64_t seed);
}  // namespace serial

}  // namespace qmarket

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

#include "qmarket/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qmarket/errors.hpp"

namespace qmarket {

BidBook::BidBook(double price_cap) : price_cap_(price_cap) {
  if (!(price_cap > 0.0)) {
    throw std::invalid_argument("price cap must be positive");
  }
}

void BidBook::add_bid(const GeneratingUnit& unit, double price) {
  if (unit.owner < 0) {
    throw std::invalid_argument("unit owner must be a nonnegative firm index");
  }
  if (!(unit.capacity > 0.0)) {
    throw std::invalid_argument("unit capacity must be positive");
  }
  if (unit.cost.slope < 0.0 || unit.cost.intercept < 0.0) {
    throw std::invalid_argument("cost coefficients must be nonnegative");
  }
  if (!(price >= 0.0) || price > price_cap_) {
    throw std::invalid_argument("bid price outside [0, price_cap]");
  }
  bids_.push_back({unit, price});
  total_capacity_ += unit.capacity;
  max_owner_ = std::max(max_owner_, unit.owner);
}

namespace {

// Bid indices sorted by (price, index); ties in price form contiguous runs.
std::vector<std::size_t> sorted_by_price(const BidBook& book) {
  std::vector<std::size_t> idx(book.bids().size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double pa = book.bids()[a].price;
    const double pb = book.bids()[b].price;
    return pa < pb || (pa == pb && a < b);
  });
  return idx;
}

}  // namespace

std::uint64_t count_rankings(const BidBook& book) {
  if (book.bids().empty()) {
    throw std::invalid_argument("count_rankings: empty bid book");
  }
  const auto idx = sorted_by_price(book);
  std::uint64_t total = 1;
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= idx.size(); ++i) {
    if (i == idx.size() ||
        book.bids()[idx[i]].price != book.bids()[idx[run_start]].price) {
      for (std::uint64_t f = 2; f <= i - run_start; ++f) {
        if (__builtin_mul_overflow(total, f, &total)) {
          throw std::overflow_error("count_rankings: product exceeds 64 bits");
        }
      }
      run_start = i;
    }
  }
  return total;
}

Ranking draw_ranking(const BidBook& book, CounterRng& rng) {
  if (book.bids().empty()) {
    throw std::invalid_argument("draw_ranking: empty bid book");
  }
  auto idx = sorted_by_price(book);
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= idx.size(); ++i) {
    if (i == idx.size() ||
        book.bids()[idx[i]].price != book.bids()[idx[run_start]].price) {
      // Fisher-Yates within the equal-price class.
      for (std::size_t j = i - run_start - 1; j > 0; --j) {
        const std::size_t k = rng.next_below(j + 1);
        std::swap(idx[run_start + j], idx[run_start + k]);
      }
      run_start = i;
    }
  }
  return Ranking{std::move(idx)};
}

DispatchResult clear(const BidBook& book, const Ranking& ranking, double demand) {
  const auto& bids = book.bids();
  if (ranking.order.size() != bids.size()) {
    throw std::invalid_argument("ranking does not match the bid book");
  }
  if (!(demand > 0.0) || demand > book.total_capacity()) {
    throw InfeasibleDemandError("demand outside (0, total capacity]");
  }

  DispatchResult result;
  result.quantities.assign(bids.size(), 0.0);
  result.utilities.assign(book.firm_count(), 0.0);

  double remaining = demand;
  std::size_t rank = 0;
  while (rank + 1 < ranking.order.size() &&
         remaining > bids[ranking.order[rank]].unit.capacity) {
    const Bid& bid = bids[ranking.order[rank]];
    result.quantities[ranking.order[rank]] = bid.unit.capacity;
    remaining -= bid.unit.capacity;
    ++rank;
  }
  const std::size_t marginal = ranking.order[rank];
  result.quantities[marginal] =
      std::min(remaining, bids[marginal].unit.capacity);
  result.marginal_rank = static_cast<int>(rank) + 1;
  result.clearing_price = bids[marginal].price;

  for (std::size_t r = 0; r <= rank; ++r) {
    const Bid& bid = bids[ranking.order[r]];
    const double q = result.quantities[ranking.order[r]];
    result.utilities[bid.unit.owner] += q * result.clearing_price - bid.unit.cost(q);
  }
  return result;
}

void DispatchResult::to_json(std::ostream& out) const {
  nlohmann::json j;
  j["quantities"] = quantities;
  j["clearing_price"] = clearing_price;
  j["marginal_rank"] = marginal_rank;
  j["utilities"] = utilities;
  out << j.dump(2) << '\n';
}

namespace {

// One trial of the unit-capacity zero-cost market: firm 0 bids `price`,
// rivals sample from the strategy, demand from the pmf.
double pure_bid_trial(double price, int n_rivals,
                      const EquilibriumStrategy& strategy, const DemandPmf& pmf,
                      CounterRng& rng) {
  const int demand = sample_demand(pmf, rng);
  BidBook book(strategy.price_cap());
  book.add_bid({0, 1.0, {}}, price);
  for (int r = 1; r <= n_rivals; ++r) {
    book.add_bid({r, 1.0, {}}, strategy.sample_bid(rng));
  }
  const Ranking ranking = draw_ranking(book, rng);
  return clear(book, ranking, demand).utilities[0];
}

void check_pure_bid_args(double price, int n_rivals,
                         const EquilibriumStrategy& strategy,
                         const DemandPmf& pmf, long trials) {
  if (trials < 1) {
    throw std::invalid_argument("expected_profit_of_pure_bid: trials < 1");
  }
  if (n_rivals < 1) {
    throw std::invalid_argument("expected_profit_of_pure_bid: need a rival");
  }
  if (pmf.levels() != n_rivals + 1) {
    throw std::invalid_argument(
        "expected_profit_of_pure_bid: pmf levels must equal n_rivals + 1");
  }
  if (!(price >= 0.0) || price > strategy.price_cap()) {
    throw std::invalid_argument("pure bid outside [0, price_cap]");
  }
}

constexpr long kTrialBlock = 1024;

}  // namespace

ProfitEstimate expected_profit_of_pure_bid(double price, int n_rivals,
                                           const EquilibriumStrategy& strategy,
                                           const DemandPmf& pmf, long trials,
                                           std::uint64_t seed) {
  check_pure_bid_args(price, n_rivals, strategy, pmf, trials);

  // Fixed-size blocks accumulated in trial order inside each block and
  // combined in block order, so the result is independent of thread count.
  const long n_blocks = (trials + kTrialBlock - 1) / kTrialBlock;
  std::vector<double> block_sum(n_blocks, 0.0);
  std::vector<double> block_sumsq(n_blocks, 0.0);

#pragma omp parallel for schedule(dynamic)
  for (long b = 0; b < n_blocks; ++b) {
    const long t_end = std::min(trials, (b + 1) * kTrialBlock);
    double sum = 0.0, sumsq = 0.0;
    for (long t = b * kTrialBlock; t < t_end; ++t) {
      CounterRng rng(seed, static_cast<std::uint64_t>(t));
      const double u = pure_bid_trial(price, n_rivals, strategy, pmf, rng);
      sum += u;
      sumsq += u * u;
    }
    block_sum[b] = sum;
    block_sumsq[b] = sumsq;
  }

  double sum = 0.0, sumsq = 0.0;
  for (long b = 0; b < n_blocks; ++b) {
    sum += block_sum[b];
    sumsq += block_sumsq[b];
  }
  ProfitEstimate out;
  out.mean = sum / static_cast<double>(trials);
  if (trials > 1) {
    const double var =
        std::max(0.0, (sumsq - sum * sum / trials) / (trials - 1));
    out.std_error = std::sqrt(var / trials);
  }
  return out;
}

namespace serial {

ProfitEstimate expected_profit_of_pure_bid(double price, int n_rivals,
                                           const EquilibriumStrategy& strategy,
                                           const DemandPmf& pmf, long trials,
                                           std::uint64_t seed) {
  check_pure_bid_args(price, n_rivals, strategy, pmf, trials);
  double sum = 0.0, sumsq = 0.0;
  for (long t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    const double u = pure_bid_trial(price, n_rivals, strategy, pmf, rng);
    sum += u;
    sumsq += u * u;
  }
  ProfitEstimate out;
  out.mean = sum / static_cast<double>(trials);
  if (trials > 1) {
    const double var =
        std::max(0.0, (sumsq - sum * sum / trials) / (trials - 1));
    out.std_error = std::sqrt(var / trials);
  }
  return out;
}

}  // namespace serial

}  // namespace qmarket

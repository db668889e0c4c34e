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

#include "qmarket/supply.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qmarket/quadrature.hpp"

namespace qmarket {

namespace {

constexpr long kTrialBlock = 1024;

void sorted_draws(const EquilibriumStrategy& strategy, int n_units,
                  CounterRng& rng, std::vector<double>& bids) {
  bids.resize(n_units);
  for (int j = 0; j < n_units; ++j) bids[j] = strategy.sample_bid(rng);
  std::sort(bids.begin(), bids.end());
}

SupplyCurve finalize(std::vector<double> sum, std::vector<double> sumsq,
                     int n_units, long trials, std::uint64_t seed) {
  SupplyCurve curve;
  curve.n_units = n_units;
  curve.trials = trials;
  curve.seed = seed;
  curve.values.resize(n_units);
  curve.std_errors.assign(n_units, 0.0);
  for (int j = 0; j < n_units; ++j) {
    curve.values[j] = sum[j] / static_cast<double>(trials);
    if (trials > 1) {
      const double var = std::max(
          0.0, (sumsq[j] - sum[j] * sum[j] / trials) / (trials - 1));
      curve.std_errors[j] = std::sqrt(var / trials);
    }
  }
  return curve;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

SupplyCurve simulate(const EquilibriumStrategy& strategy, long trials,
                     std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("simulate: trials < 1");
  const int n = strategy.demand().levels();

  const long n_blocks = (trials + kTrialBlock - 1) / kTrialBlock;
  std::vector<double> block_sum(n_blocks * n, 0.0);
  std::vector<double> block_sumsq(n_blocks * n, 0.0);

#pragma omp parallel for schedule(dynamic)
  for (long b = 0; b < n_blocks; ++b) {
    std::vector<double> bids;
    double* sum = block_sum.data() + b * n;
    double* sumsq = block_sumsq.data() + b * n;
    const long t_end = std::min(trials, (b + 1) * kTrialBlock);
    for (long t = b * kTrialBlock; t < t_end; ++t) {
      CounterRng rng(seed, static_cast<std::uint64_t>(t));
      sorted_draws(strategy, n, rng, bids);
      for (int j = 0; j < n; ++j) {
        sum[j] += bids[j];
        sumsq[j] += bids[j] * bids[j];
      }
    }
  }

  std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
  for (long b = 0; b < n_blocks; ++b) {
    for (int j = 0; j < n; ++j) {
      sum[j] += block_sum[b * n + j];
      sumsq[j] += block_sumsq[b * n + j];
    }
  }
  return finalize(std::move(sum), std::move(sumsq), n, trials, seed);
}

namespace serial {

SupplyCurve simulate(const EquilibriumStrategy& strategy, long trials,
                     std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("simulate: trials < 1");
  const int n = strategy.demand().levels();
  std::vector<double> sum(n, 0.0), sumsq(n, 0.0), bids;
  for (long t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    sorted_draws(strategy, n, rng, bids);
    for (int j = 0; j < n; ++j) {
      sum[j] += bids[j];
      sumsq[j] += bids[j] * bids[j];
    }
  }
  return finalize(std::move(sum), std::move(sumsq), n, trials, seed);
}

}  // namespace serial

SupplyCurve exact_curve(const EquilibriumStrategy& strategy, int n_units) {
  if (n_units < 1) throw std::invalid_argument("exact_curve: n_units < 1");

  // Nodes of a fixed rule on every grid segment; quantile values and the
  // log factors are shared across the order-statistic index j.
  const GaussLegendre rule(20);
  const auto& grid = strategy.grid_fractions();
  const int segments = static_cast<int>(grid.size()) - 1;
  const int total = segments * rule.size();

  std::vector<double> node_w(total), node_q(total), node_lu(total),
      node_l1mu(total);
  for (int s = 0; s < segments; ++s) {
    const double mid = 0.5 * (grid[s] + grid[s + 1]);
    const double half = 0.5 * (grid[s + 1] - grid[s]);
    for (int i = 0; i < rule.size(); ++i) {
      const int at = s * rule.size() + i;
      const double u = mid + half * rule.nodes()[i];
      node_w[at] = rule.weights()[i] * half;
      node_q[at] = strategy.quantile(u);
      node_lu[at] = std::log(u);
      node_l1mu[at] = std::log1p(-u);
    }
  }

  SupplyCurve curve;
  curve.n_units = n_units;
  curve.trials = 0;
  curve.seed = 0;
  curve.values.resize(n_units);
  curve.std_errors.assign(n_units, 0.0);
  for (int j = 1; j <= n_units; ++j) {
    // 1/Beta(j, n-j+1) via log-gamma; the binomial factors overflow well
    // before n_units reaches the sizes used here.
    const double log_norm = std::lgamma(n_units + 1.0) - std::lgamma(j + 0.0) -
                            std::lgamma(n_units - j + 1.0);
    double acc = 0.0;
    for (int at = 0; at < total; ++at) {
      const double density = std::exp(log_norm + (j - 1) * node_lu[at] +
                                      (n_units - j) * node_l1mu[at]);
      acc += node_w[at] * node_q[at] * density;
    }
    curve.values[j - 1] = acc;
  }
  return curve;
}

CompareReport compare(const SupplyCurve& mc, const SupplyCurve& exact) {
  if (mc.size() != exact.size()) {
    throw std::invalid_argument("compare: curves have different lengths");
  }
  CompareReport report;
  report.z_scores.resize(mc.size());
  report.pass = true;
  for (int j = 0; j < mc.size(); ++j) {
    const double diff = mc.values[j] - exact.values[j];
    const double se = mc.std_errors[j];
    double z = 0.0;
    if (diff != 0.0) {
      z = (se > 0.0) ? diff / se
                     : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    report.z_scores[j] = z;
    if (!(std::abs(z) <= 3.0)) report.pass = false;
  }
  return report;
}

void write_curve_csv(const SupplyCurve& curve, std::ostream& out) {
  std::string text = "j,V,se\n";
  for (int j = 0; j < curve.size(); ++j) {
    text += std::to_string(j + 1);
    text += ',';
    append_double(text, curve.values[j]);
    text += ',';
    append_double(text, curve.std_errors[j]);
    text += '\n';
  }
  out << text;
}

SupplyCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("j,V,se", 0) != 0) {
    throw std::invalid_argument("supply CSV: missing \"j,V,se\" header");
  }
  SupplyCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    double vals[3];
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(row, field, ',')) {
        throw std::invalid_argument("supply CSV: short row: " + line);
      }
      const char* first = field.data();
      const char* last = field.data() + field.size();
      const auto res = std::from_chars(first, last, vals[c]);
      if (res.ec != std::errc{} || res.ptr != last) {
        throw std::invalid_argument("supply CSV: bad number: " + field);
      }
    }
    curve.values.push_back(vals[1]);
    curve.std_errors.push_back(vals[2]);
  }
  if (curve.values.empty()) {
    throw std::invalid_argument("supply CSV: no data rows");
  }
  curve.n_units = curve.size();
  return curve;
}

}  // namespace qmarket

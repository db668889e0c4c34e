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

#include "qmarket/demand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qmarket/errors.hpp"

namespace qmarket {

BackgroundDistribution BackgroundDistribution::uniform() {
  BackgroundDistribution d;
  d.kind_ = DensityKind::kUniform;
  return d;
}

BackgroundDistribution BackgroundDistribution::power_left(double exponent) {
  if (!(exponent >= 0.0)) {
    throw std::invalid_argument("power_left: exponent must be >= 0");
  }
  BackgroundDistribution d;
  d.kind_ = DensityKind::kPowerLeft;
  d.exponent_ = exponent;
  return d;
}

BackgroundDistribution BackgroundDistribution::power_right(double exponent) {
  if (!(exponent >= 0.0)) {
    throw std::invalid_argument("power_right: exponent must be >= 0");
  }
  BackgroundDistribution d;
  d.kind_ = DensityKind::kPowerRight;
  d.exponent_ = exponent;
  return d;
}

BackgroundDistribution BackgroundDistribution::piecewise_constant(
    std::vector<double> breakpoints, std::vector<double> levels) {
  if (breakpoints.size() < 2 || levels.size() + 1 != breakpoints.size()) {
    throw std::invalid_argument(
        "piecewise_constant: need m+1 breakpoints for m segment levels");
  }
  if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
    throw std::invalid_argument(
        "piecewise_constant: breakpoints must start at 0 and end at 1");
  }
  double mass = 0.0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (!(breakpoints[j + 1] > breakpoints[j])) {
      throw std::invalid_argument(
          "piecewise_constant: breakpoints must be strictly increasing");
    }
    if (!(levels[j] >= 0.0)) {
      throw std::invalid_argument("piecewise_constant: negative level");
    }
    mass += levels[j] * (breakpoints[j + 1] - breakpoints[j]);
  }
  if (!(mass > 0.0)) {
    throw std::invalid_argument("piecewise_constant: density has zero mass");
  }
  for (double& l : levels) l /= mass;

  BackgroundDistribution d;
  d.kind_ = DensityKind::kPiecewiseConstant;
  d.breakpoints_ = std::move(breakpoints);
  d.levels_ = std::move(levels);
  return d;
}

BackgroundDistribution BackgroundDistribution::piecewise_constant_from_stream(
    std::istream& in) {
  std::vector<double> breakpoints{0.0};
  std::vector<double> levels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream row(line);
    double b = 0.0, level = 0.0;
    if (!(row >> b)) continue;  // blank or comment-only line
    if (!(row >> level)) {
      throw std::invalid_argument("piecewise density line " +
                                  std::to_string(lineno) +
                                  ": expected \"breakpoint level\"");
    }
    breakpoints.push_back(b);
    levels.push_back(level);
  }
  if (levels.empty()) {
    throw std::invalid_argument("piecewise density: no segments found");
  }
  if (std::abs(breakpoints.back() - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "piecewise density: final breakpoint must be 1.0");
  }
  breakpoints.back() = 1.0;
  return piecewise_constant(std::move(breakpoints), std::move(levels));
}

BackgroundDistribution BackgroundDistribution::piecewise_constant_from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open density file: " + path.string());
  }
  return piecewise_constant_from_stream(in);
}

double BackgroundDistribution::density(double x) const {
  if (x < 0.0 || x > 1.0) return 0.0;
  switch (kind_) {
    case DensityKind::kUniform:
      return 1.0;
    case DensityKind::kPowerLeft:
      return (exponent_ + 1.0) * std::pow(x, exponent_);
    case DensityKind::kPowerRight:
      return (exponent_ + 1.0) * std::pow(1.0 - x, exponent_);
    case DensityKind::kPiecewiseConstant: {
      const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
      const std::size_t seg =
          std::min(levels_.size() - 1,
                   static_cast<std::size_t>(
                       std::max<std::ptrdiff_t>(0, it - breakpoints_.begin() - 1)));
      return levels_[seg];
    }
  }
  return 0.0;
}

double BackgroundDistribution::cumulative(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  switch (kind_) {
    case DensityKind::kUniform:
      return x;
    case DensityKind::kPowerLeft:
      return std::pow(x, exponent_ + 1.0);
    case DensityKind::kPowerRight:
      return 1.0 - std::pow(1.0 - x, exponent_ + 1.0);
    case DensityKind::kPiecewiseConstant: {
      double acc = 0.0;
      for (std::size_t j = 0; j < levels_.size(); ++j) {
        const double lo = breakpoints_[j];
        const double hi = breakpoints_[j + 1];
        if (x <= lo) break;
        acc += levels_[j] * (std::min(x, hi) - lo);
      }
      return acc;
    }
  }
  return 0.0;
}

std::string BackgroundDistribution::label() const {
  switch (kind_) {
    case DensityKind::kUniform:
      return "uniform";
    case DensityKind::kPowerLeft: {
      std::ostringstream s;
      s << "power-left(" << exponent_ << ")";
      return s.str();
    }
    case DensityKind::kPowerRight: {
      std::ostringstream s;
      s << "power-right(" << exponent_ << ")";
      return s.str();
    }
    case DensityKind::kPiecewiseConstant:
      return "piecewise-constant";
  }
  return "unknown";
}

DemandPmf discretize(const BackgroundDistribution& h, int n_levels) {
  if (n_levels < 2) {
    throw std::invalid_argument("discretize: need at least 2 demand levels");
  }
  DemandPmf pmf;
  pmf.probs.resize(n_levels);
  double prev = 0.0;
  for (int i = 1; i <= n_levels; ++i) {
    const double cur =
        (i == n_levels) ? 1.0 : h.cumulative(static_cast<double>(i) / n_levels);
    pmf.probs[i - 1] = cur - prev;
    prev = cur;
  }
  return pmf;
}

void validate_for_equilibrium(const DemandPmf& pmf) {
  if (pmf.levels() < 1) {
    throw std::invalid_argument("demand pmf is empty");
  }
  if (!(pmf.probs.front() > 0.0)) {
    throw UnsupportedDemandError(
        "demand pmf has zero mass at the lowest level (probs[0] = 0)");
  }
  if (!(pmf.probs.back() > 0.0)) {
    throw UnsupportedDemandError(
        "demand pmf has zero mass at the highest level (probs[N-1] = 0)");
  }
}

int sample_demand(const DemandPmf& pmf, CounterRng& rng) {
  const double u = rng.next_unit();
  double acc = 0.0;
  const int n = pmf.levels();
  for (int i = 0; i < n; ++i) {
    acc += pmf.probs[i];
    if (u <= acc) return i + 1;
  }
  return n;  // guards against cumulative rounding just below 1
}

}  // namespace qmarket

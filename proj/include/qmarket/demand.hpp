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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qmarket/rng.hpp"

namespace qmarket {

enum class DensityKind { kUniform, kPowerLeft, kPowerRight, kPiecewiseConstant };

/// Continuous demand density on [0, 1]. All variants are normalized at
/// construction; the cumulative is available in closed form, so bin
/// probabilities are exact antiderivative differences (no quadrature).
///
/// Kinds:
///   uniform            density 1
///   power-left(k)      density (k+1) x^k            (mass toward x = 1)
///   power-right(k)     density (k+1)(1-x)^k         (mass toward x = 0)
///   piecewise-constant nonnegative step function, normalized on load
class BackgroundDistribution {
 public:
  static BackgroundDistribution uniform();
  static BackgroundDistribution power_left(double exponent);
  static BackgroundDistribution power_right(double exponent);

  /// breakpoints: 0 = b0 < b1 < ... < bm = 1; levels: one per segment, >= 0,
  /// at least one positive. Levels are rescaled to unit mass.
  static BackgroundDistribution piecewise_constant(std::vector<double> breakpoints,
                                                   std::vector<double> levels);

  /// Text format, one segment per line: "b_j level_j" meaning the density is
  /// level_j on [b_{j-1}, b_j), with b_0 = 0 implied and the final breakpoint
  /// required to be 1.0. '#' starts a comment.
  static BackgroundDistribution piecewise_constant_from_file(
      const std::filesystem::path& path);
  static BackgroundDistribution piecewise_constant_from_stream(std::istream& in);

  DensityKind kind() const { return kind_; }
  double exponent() const { return exponent_; }

  double density(double x) const;
  /// Exact cumulative integral of the density over [0, x].
  double cumulative(double x) const;

  std::string label() const;

 private:
  BackgroundDistribution() = default;

  DensityKind kind_ = DensityKind::kUniform;
  double exponent_ = 0.0;                // power kinds
  std::vector<double> breakpoints_;      // piecewise kind, includes 0 and 1
  std::vector<double> levels_;           // normalized segment densities
};

/// Probability vector over demand levels 1..N.
struct DemandPmf {
  std::vector<double> probs;

  int levels() const { return static_cast<int>(probs.size()); }
};

/// Exact bin integrals of the density: probs[i-1] = integral of h over
/// [(i-1)/N, i/N]. Requires n_levels >= 2.
DemandPmf discretize(const BackgroundDistribution& h, int n_levels);

/// The equilibrium solve needs positive mass at both endpoint demand levels;
/// throws UnsupportedDemandError naming the offending endpoint otherwise.
void validate_for_equilibrium(const DemandPmf& pmf);

/// Draw a demand level in 1..N with probability probs[i-1], by inverse CDF.
int sample_demand(const DemandPmf& pmf, CounterRng& rng);

}  // namespace qmarket

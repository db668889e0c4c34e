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

#include <stdexcept>
#include <string>

namespace qmarket {

/// Base class for qmarket-specific failures. Argument and domain problems
/// use std::invalid_argument / std::domain_error directly.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Demand pmf has zero mass at an endpoint, the equilibrium integral diverges.
class UnsupportedDemandError : public Error {
 public:
  using Error::Error;
};

/// Demand outside (0, total capacity].
class InfeasibleDemandError : public Error {
 public:
  using Error::Error;
};

/// Solver detected a negative quantile slope and refuses to emit a non-CDF.
class NonmonotoneEquilibriumError : public Error {
 public:
  using Error::Error;
};

/// q-exponential evaluated at or beyond its pole (q > 1, (q-1)x >= 1).
class PoleDomainError : public Error {
 public:
  using Error::Error;
};

/// Projected scale coefficient would be nonpositive for the given data.
class NoFeasibleAlphaError : public Error {
 public:
  using Error::Error;
};

/// Multistart search ended with no feasible candidate.
class FitFailedError : public Error {
 public:
  using Error::Error;
};

}  // namespace qmarket

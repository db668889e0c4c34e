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

namespace qmarket {

namespace detail {

// Stafford mix13 finalizer (splitmix64 avalanche).
inline std::uint64_t avalanche(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator: the k-th output of stream s under key `key` is a
/// pure function of (key, s, k). Distinct (stream, counter) pairs never
/// collide, so per-trial substreams can be handed out without bookkeeping and
/// results do not depend on how work is split across threads.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t stream = 0)
      : key_(key), stream_(stream) {}

  std::uint64_t next_u64() {
    std::uint64_t z = key_ + 0x9E3779B97F4A7C15ULL * counter_++;
    z = detail::avalanche(z ^ detail::avalanche(stream_ + 0xD1B54A32D192ED03ULL));
    return detail::avalanche(z);
  }

  /// Uniform double strictly inside (0, 1).
  double next_unit() {
    const std::uint64_t bits = next_u64() >> 11;  // top 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Unbiased uniform integer in [0, n). n must be positive.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = ~0ULL - ~0ULL % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

/// Deterministic seed derivation for nested experiments (e.g. one seed per N).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  return detail::avalanche(detail::avalanche(master) ^
                           (tag + 0x9E3779B97F4A7C15ULL));
}

}  // namespace qmarket

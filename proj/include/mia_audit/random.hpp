// Copyright 2026 The MIA Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Portable seeded randomness.
//
// The bit source is std::mt19937_64, whose output sequence is fixed by the
// C++ standard. The standard distributions are NOT portable, so every
// conversion from raw bits is spelled out here:
//
//   Uniform01:   (bits >> 11) * 2^-53, a double in [0, 1).
//   UniformBelow(n): rejection sampling on bits; draws are rejected while
//                bits >= 2^64 - (2^64 mod n), then bits mod n is returned.
//   Normal:      Box-Muller, one normal per call using two Uniform01 draws
//                u1, u2: sqrt(-2 ln(1 - u1)) * cos(2 pi u2).
//   PartialShuffle(k): the first k steps of Fisher-Yates; step i swaps
//                position i with i + UniformBelow(n - i).
//
// Independent streams are derived with SplitMix64 so that per-query streams
// do not depend on evaluation order.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace mia_audit {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  return SplitMix64(SplitMix64(seed) ^ SplitMix64(stream + 0x632BE59BD9B4E019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Bits() { return engine_(); }

  double Uniform01() {
    return static_cast<double>(Bits() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t UniformBelow(std::uint64_t n) {
    // 2^64 mod n, computed without overflow.
    const std::uint64_t rem = (0 - n) % n;
    const std::uint64_t limit = 0 - rem;  // 2^64 - rem (wraps to 0 when rem 0)
    for (;;) {
      const std::uint64_t bits = Bits();
      if (rem == 0 || bits < limit) return bits % n;
    }
  }

  double Normal(double mean, double stddev) {
    const double u1 = Uniform01();
    const double u2 = Uniform01();
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Moves a uniformly chosen k-subset (in draw order) to the front.
  template <typename T>
  void PartialShuffle(std::span<T> items, std::size_t k) {
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(UniformBelow(n - i));
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mia_audit

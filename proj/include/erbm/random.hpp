// Copyright 2026 The erbm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace erbm {

/// SplitMix64 finalizer; used to turn (seed, stream name) into engine seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of the named substream of \p seed. Distinct names give statistically
/// independent streams, so adding a consumer never shifts another's draws.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) noexcept;

/// A seeded random stream. All draws are produced from the raw 64-bit output
/// of std::mt19937_64 with fixed conversions, so sequences are reproducible
/// bit-for-bit for a given seed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

  static RandomStream named(std::uint64_t seed, std::string_view name) {
    return RandomStream(substream_seed(seed, name));
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). \p bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal draw (Box-Muller on two uniforms).
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace erbm

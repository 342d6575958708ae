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
#include "erbm/random.hpp"

#include <cmath>
#include <numbers>

#include "erbm/error.hpp"

namespace erbm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kSizeGuard: return "size guard exceeded";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kDivergence: return "training diverged";
  }
  return "unknown";
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed,
                             std::string_view name) noexcept {
  // FNV-1a over the name, then mixed with the seed.
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return mix64(seed ^ mix64(h));
}

std::uint64_t RandomStream::below(std::uint64_t bound) {
  if (bound == 0) {
    throw Error(ErrorKind::kInvalidArgument, "RandomStream::below: bound is 0");
  }
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace erbm

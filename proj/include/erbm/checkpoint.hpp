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

#include <array>
#include <cstdint>
#include <filesystem>

#include "erbm/rbm.hpp"

namespace erbm {

/// Binary model checkpoint.
///
/// Layout (all integers and reals little-endian):
///   magic "ERBM" (4 bytes), format version u32,
///   m u64, n u64, seed u64, epochs u64,
///   weights m*n f64 row-major, visible bias m f64, hidden bias n f64.
inline constexpr std::array<char, 4> kCheckpointMagic = {'E', 'R', 'B', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RbmParams<double> params;
  std::uint64_t seed = 0;
  std::uint64_t epochs = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace erbm

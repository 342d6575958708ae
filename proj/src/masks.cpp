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
#include "erbm/masks.hpp"

#include <algorithm>
#include <bit>

namespace erbm {

Index HiddenMask::dropped() const {
  return static_cast<Index>(std::count(bits.begin(), bits.end(), 0));
}

WeightMask::WeightMask(Index rows, Index cols)
    : rows_(rows),
      cols_(cols),
      words_per_column_((rows + 63) / 64),
      words_(static_cast<size_t>(words_per_column_ * cols), 0) {}

WeightMask WeightMask::all_kept(Index rows, Index cols) {
  WeightMask mask(rows, cols);
  std::fill(mask.words_.begin(), mask.words_.end(), ~std::uint64_t{0});
  mask.clear_padding();
  return mask;
}

void WeightMask::set(Index i, Index j, bool keep) {
  auto& word = words_[static_cast<size_t>(j * words_per_column_ + i / 64)];
  const std::uint64_t bit = std::uint64_t{1} << (i % 64);
  word = keep ? (word | bit) : (word & ~bit);
}

Index WeightMask::dropped() const {
  Index kept = 0;
  for (const auto word : words_) kept += std::popcount(word);
  return rows_ * cols_ - kept;
}

void WeightMask::clear_padding() {
  const Index tail = rows_ % 64;
  if (tail == 0 || words_.empty()) return;
  const std::uint64_t keep_bits = (std::uint64_t{1} << tail) - 1;
  for (Index j = 0; j < cols_; ++j) {
    column_words(j)[words_per_column_ - 1] &= keep_bits;
  }
}

}  // namespace erbm

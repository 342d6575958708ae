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
#include <cstring>
#include <vector>

#include "erbm/linalg.hpp"

namespace erbm {

/// Keep (1) / drop (0) flag per hidden unit.
struct HiddenMask {
  std::vector<std::uint8_t> bits;

  static HiddenMask all_kept(Index n) {
    return HiddenMask{std::vector<std::uint8_t>(static_cast<size_t>(n), 1)};
  }

  Index size() const { return static_cast<Index>(bits.size()); }
  Index dropped() const;

  template <typename T>
  Vector<T> as_vector() const {
    Vector<T> out(size());
    for (Index j = 0; j < size(); ++j) out[j] = bits[static_cast<size_t>(j)];
    return out;
  }
};

/// Keep (1) / drop (0) flag per connection of an m x n weight matrix, packed
/// 64 flags per word. Flags are grouped by hidden unit (column), so expanding
/// into a column-major Eigen matrix writes contiguous memory.
class WeightMask {
 public:
  WeightMask() = default;
  WeightMask(Index rows, Index cols);

  static WeightMask all_kept(Index rows, Index cols);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index words_per_column() const { return words_per_column_; }

  bool kept(Index i, Index j) const {
    const auto word = words_[static_cast<size_t>(j * words_per_column_ + i / 64)];
    return (word >> (i % 64)) & 1u;
  }
  void set(Index i, Index j, bool keep);

  /// Raw words of column j; bits past rows() are always zero.
  std::uint64_t* column_words(Index j) {
    return words_.data() + j * words_per_column_;
  }
  const std::uint64_t* column_words(Index j) const {
    return words_.data() + j * words_per_column_;
  }

  Index dropped() const;

  /// Writes the mask as 0/1 values into a rows() x cols() matrix.
  template <typename T>
  void expand_into(Matrix<T>& out) const;

  template <typename T>
  Matrix<T> as_matrix() const {
    Matrix<T> out(rows_, cols_);
    expand_into(out);
    return out;
  }

  /// Clears padding bits past rows() in every column.
  void clear_padding();

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Index words_per_column_ = 0;
  std::vector<std::uint64_t> words_;
};

template <typename T>
void WeightMask::expand_into(Matrix<T>& out) const {
  // 0/1 patterns for every byte value, low bit first.
  static const auto table = [] {
    std::array<std::array<T, 8>, 256> t{};
    for (int b = 0; b < 256; ++b) {
      for (int k = 0; k < 8; ++k) t[b][k] = static_cast<T>((b >> k) & 1);
    }
    return t;
  }();
  out.resize(rows_, cols_);
  for (Index j = 0; j < cols_; ++j) {
    const std::uint64_t* col = column_words(j);
    T* dst = out.data() + j * rows_;
    Index i = 0;
    for (; i + 8 <= rows_; i += 8) {
      const auto byte = (col[i >> 6] >> (i & 63)) & 0xFFu;
      std::memcpy(dst + i, table[byte].data(), sizeof(T) * 8);
    }
    for (; i < rows_; ++i) {
      dst[i] = static_cast<T>((col[i >> 6] >> (i & 63)) & 1u);
    }
  }
}

}  // namespace erbm

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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "erbm/linalg.hpp"

namespace erbm {

inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;

/// Decoded IDX container (unsigned-byte payloads only).
struct IdxFile {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;
};

/// Big-endian IDX decoding with an exact payload-length check.
IdxFile parse_idx(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_idx(const IdxFile& file);

/// Reads a whole file, inflating it first if it is gzip-compressed.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

struct NormalizeOptions {
  /// When set, pixels become 1 if value/255 >= threshold and 0 otherwise.
  std::optional<double> binarize_threshold;
};

/// Images flattened row-major, one per row, scaled to [0, 1].
struct Dataset {
  std::string name;
  RowMatrix<float> images;
  Index height = 0;
  Index width = 0;

  Index size() const { return images.rows(); }
};

Dataset dataset_from_idx(const IdxFile& file, std::string name,
                         const NormalizeOptions& options = {});

Dataset load_dataset(const std::filesystem::path& images_path,
                     const NormalizeOptions& options = {});

/// Locations of the image files of one dataset.
struct DatasetFiles {
  std::string name;
  std::filesystem::path train_images;
  std::filesystem::path test_images;
};

/// Accepts a directory holding train-images-idx3-ubyte / t10k-images-idx3-ubyte
/// (optionally .gz), or a bare dataset name looked up under $ERBM_DATA_DIR
/// (default ./data).
DatasetFiles resolve_dataset(std::string_view name_or_path);

struct BatchPlan {
  Index batch_size = 256;
  std::uint64_t seed = 0;
};

/// Fisher-Yates permutation of [0, n), fixed by (plan.seed, epoch).
std::vector<Index> epoch_permutation(Index n, const BatchPlan& plan, int epoch);

/// Row indices of each batch of one epoch; the last batch may be partial.
std::vector<std::vector<Index>> batch_indices(Index n, const BatchPlan& plan,
                                              int epoch);

template <typename T>
RowMatrix<T> gather_rows(const RowMatrix<float>& images,
                         std::span<const Index> rows) {
  RowMatrix<T> out(static_cast<Index>(rows.size()), images.cols());
  for (size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Index>(k)) = images.row(rows[k]).template cast<T>();
  }
  return out;
}

std::vector<RowMatrix<float>> batches(const Dataset& dataset,
                                      const BatchPlan& plan, int epoch);

}  // namespace erbm

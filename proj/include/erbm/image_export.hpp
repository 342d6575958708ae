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
#include <vector>

#include "erbm/linalg.hpp"
#include "erbm/rbm.hpp"

namespace erbm {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> pixels;
};

/// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

/// Tiles the incoming weights of the first grid_rows * grid_cols hidden units,
/// each reshaped to patch_height x patch_width and min-max normalized on its
/// own (a constant filter maps to mid-gray).
GrayImage tile_weight_filters(const Matrix<double>& weights, Index grid_rows,
                              Index grid_cols, Index patch_height = 28,
                              Index patch_width = 28);

void export_weight_filters(const RbmParams<double>& params, Index grid_rows,
                           Index grid_cols, const std::filesystem::path& path,
                           Index patch_height = 28, Index patch_width = 28);

inline constexpr Index kPairsPerSheet = 16;

/// Writes original | reconstruction pairs, kPairsPerSheet per sheet (4 x 4
/// pairs), to \p dir/<prefix>_<k>.pgm. Returns the files written.
std::vector<std::filesystem::path> export_reconstruction_sheets(
    const RowMatrix<float>& originals, const RowMatrix<float>& reconstructions,
    Index height, Index width, const std::filesystem::path& dir,
    const std::string& prefix = "reconstructions");

}  // namespace erbm

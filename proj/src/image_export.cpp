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
#include "erbm/image_export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "erbm/error.hpp"

namespace erbm {

namespace {

std::uint8_t to_byte(double value) {
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(value, 0.0, 1.0)));
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (static_cast<Index>(image.pixels.size()) != image.height * image.width) {
    throw Error(ErrorKind::kDimensionMismatch, "write_pgm: pixel count mismatch");
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  file << "P5\n" << image.width << " " << image.height << "\n255\n";
  file.write(reinterpret_cast<const char*>(image.pixels.data()),
             static_cast<std::streamsize>(image.pixels.size()));
  if (!file) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  GrayImage image;
  file >> magic >> image.width >> image.height >> maxval;
  if (magic != "P5" || maxval != 255 || image.width <= 0 || image.height <= 0) {
    throw Error(ErrorKind::kParse, "not an 8-bit P5 image: " + path.string());
  }
  file.get();  // single whitespace before the raster
  image.pixels.resize(static_cast<size_t>(image.width * image.height));
  file.read(reinterpret_cast<char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (file.gcount() != static_cast<std::streamsize>(image.pixels.size())) {
    throw Error(ErrorKind::kParse, "truncated raster in " + path.string());
  }
  return image;
}

GrayImage tile_weight_filters(const Matrix<double>& weights, Index grid_rows,
                              Index grid_cols, Index patch_height,
                              Index patch_width) {
  if (weights.rows() != patch_height * patch_width) {
    throw Error(ErrorKind::kDimensionMismatch,
                "weight filters: visible size is not patch height x width");
  }
  if (grid_rows < 1 || grid_cols < 1 || grid_rows * grid_cols > weights.cols()) {
    throw Error(ErrorKind::kInvalidArgument,
                "weight filters: grid needs " + std::to_string(grid_rows * grid_cols) +
                    " hidden units, model has " + std::to_string(weights.cols()));
  }
  GrayImage image;
  image.height = grid_rows * patch_height;
  image.width = grid_cols * patch_width;
  image.pixels.assign(static_cast<size_t>(image.height * image.width), 0);
  for (Index cell = 0; cell < grid_rows * grid_cols; ++cell) {
    const auto filter = weights.col(cell);
    const double lo = filter.minCoeff();
    const double hi = filter.maxCoeff();
    const Index top = (cell / grid_cols) * patch_height;
    const Index left = (cell % grid_cols) * patch_width;
    for (Index r = 0; r < patch_height; ++r) {
      for (Index c = 0; c < patch_width; ++c) {
        const double w = filter[r * patch_width + c];
        const double scaled = hi > lo ? (w - lo) / (hi - lo) : 0.5;
        image.pixels[static_cast<size_t>((top + r) * image.width + left + c)] =
            to_byte(scaled);
      }
    }
  }
  return image;
}

void export_weight_filters(const RbmParams<double>& params, Index grid_rows,
                           Index grid_cols, const std::filesystem::path& path,
                           Index patch_height, Index patch_width) {
  write_pgm(path, tile_weight_filters(params.weights, grid_rows, grid_cols,
                                      patch_height, patch_width));
}

std::vector<std::filesystem::path> export_reconstruction_sheets(
    const RowMatrix<float>& originals, const RowMatrix<float>& reconstructions,
    Index height, Index width, const std::filesystem::path& dir,
    const std::string& prefix) {
  if (originals.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "reconstructions: empty subset");
  }
  if (originals.rows() != reconstructions.rows() ||
      originals.cols() != reconstructions.cols() || originals.cols() != height * width) {
    throw Error(ErrorKind::kDimensionMismatch, "reconstructions: shape mismatch");
  }
  constexpr Index kPairsPerRow = 4;
  constexpr Index kRowsPerSheet = kPairsPerSheet / kPairsPerRow;
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const Index count = originals.rows();
  for (Index first = 0, sheet = 0; first < count; first += kPairsPerSheet, ++sheet) {
    GrayImage image;
    image.height = kRowsPerSheet * height;
    image.width = kPairsPerRow * 2 * width;
    image.pixels.assign(static_cast<size_t>(image.height * image.width), 0);
    for (Index k = 0; k < kPairsPerSheet && first + k < count; ++k) {
      const Index top = (k / kPairsPerRow) * height;
      const Index left = (k % kPairsPerRow) * 2 * width;
      for (Index r = 0; r < height; ++r) {
        for (Index c = 0; c < width; ++c) {
          const auto row = static_cast<size_t>((top + r) * image.width);
          image.pixels[row + static_cast<size_t>(left + c)] =
              to_byte(originals(first + k, r * width + c));
          image.pixels[row + static_cast<size_t>(left + width + c)] =
              to_byte(reconstructions(first + k, r * width + c));
        }
      }
    }
    std::ostringstream name;
    name << prefix << "_" << sheet << ".pgm";
    written.push_back(dir / name.str());
    write_pgm(written.back(), image);
  }
  return written;
}

}  // namespace erbm

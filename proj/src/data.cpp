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
#include "erbm/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "erbm/error.hpp"
#include "erbm/random.hpp"

namespace erbm {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  out.push_back(static_cast<std::uint8_t>(x >> 24));
  out.push_back(static_cast<std::uint8_t>(x >> 16));
  out.push_back(static_cast<std::uint8_t>(x >> 8));
  out.push_back(static_cast<std::uint8_t>(x));
}

std::string hex32(std::uint32_t x) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += kDigits[(x >> shift) & 0xF];
  return s;
}

std::filesystem::path find_file(const std::filesystem::path& dir,
                                std::initializer_list<const char*> names) {
  for (const char* name : names) {
    for (const char* suffix : {"", ".gz"}) {
      auto candidate = dir / (std::string(name) + suffix);
      if (std::filesystem::exists(candidate)) return candidate;
    }
  }
  throw Error(ErrorKind::kIo, "no " + std::string(*names.begin()) +
                                  "[.gz] in " + dir.string());
}

}  // namespace

IdxFile parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) {
    throw Error(ErrorKind::kParse, "idx: header needs 4 bytes, got " +
                                       std::to_string(bytes.size()));
  }
  IdxFile file;
  file.magic = read_be32(bytes, 0);
  size_t rank = 0;
  if (file.magic == kIdxImageMagic) {
    rank = 3;
  } else if (file.magic == kIdxLabelMagic) {
    rank = 1;
  } else {
    throw Error(ErrorKind::kParse, "idx: unsupported magic " + hex32(file.magic));
  }
  const size_t header = 4 + 4 * rank;
  if (bytes.size() < header) {
    throw Error(ErrorKind::kParse, "idx: truncated header, expected " +
                                       std::to_string(header) + " bytes, got " +
                                       std::to_string(bytes.size()));
  }
  std::uint64_t count = 1;
  for (size_t d = 0; d < rank; ++d) {
    const std::uint32_t dim = read_be32(bytes, 4 + 4 * d);
    file.dims.push_back(dim);
    if (dim != 0 && count > std::numeric_limits<std::uint64_t>::max() / dim) {
      throw Error(ErrorKind::kParse, "idx: dimension product overflows");
    }
    count *= dim;
  }
  const std::uint64_t actual = bytes.size() - header;
  if (actual != count) {
    throw Error(ErrorKind::kParse,
                std::string("idx: ") + (actual < count ? "truncated" : "oversized") +
                    " payload, expected " + std::to_string(count) +
                    " bytes, got " + std::to_string(actual));
  }
  file.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return file;
}

std::vector<std::uint8_t> encode_idx(const IdxFile& file) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * file.dims.size() + file.payload.size());
  write_be32(out, file.magic);
  for (const auto dim : file.dims) write_be32(out, dim);
  out.insert(out.end(), file.payload.begin(), file.payload.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile handle = gzopen(path.c_str(), "rb");
  if (handle == nullptr) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::vector<std::uint8_t> chunk(1 << 20);
  for (;;) {
    const int got = gzread(handle, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (got < 0) {
      int code = 0;
      const std::string message = gzerror(handle, &code);
      gzclose(handle);
      throw Error(ErrorKind::kIo, "read failed for " + path.string() + ": " + message);
    }
    if (got == 0) break;
    bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + got);
  }
  gzclose(handle);
  return bytes;
}

Dataset dataset_from_idx(const IdxFile& file, std::string name,
                         const NormalizeOptions& options) {
  if (file.magic != kIdxImageMagic || file.dims.size() != 3) {
    throw Error(ErrorKind::kParse, "dataset: expected a 3-D image idx file");
  }
  Dataset data;
  data.name = std::move(name);
  data.height = file.dims[1];
  data.width = file.dims[2];
  const Index count = file.dims[0];
  const Index pixels = data.height * data.width;
  data.images.resize(count, pixels);
  float* dst = data.images.data();
  for (size_t k = 0; k < file.payload.size(); ++k) {
    const float value = static_cast<float>(file.payload[k]) / 255.0f;
    if (options.binarize_threshold) {
      dst[k] = value >= *options.binarize_threshold ? 1.0f : 0.0f;
    } else {
      dst[k] = value;
    }
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& images_path,
                     const NormalizeOptions& options) {
  const auto bytes = read_file_bytes(images_path);
  return dataset_from_idx(parse_idx(bytes), images_path.filename().string(), options);
}

DatasetFiles resolve_dataset(std::string_view name_or_path) {
  std::filesystem::path dir(name_or_path);
  if (!std::filesystem::is_directory(dir)) {
    const char* root = std::getenv("ERBM_DATA_DIR");
    dir = std::filesystem::path(root != nullptr ? root : "data") / name_or_path;
  }
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::kIo, "dataset '" + std::string(name_or_path) +
                                    "' not found (looked in " + dir.string() + ")");
  }
  DatasetFiles files;
  files.name = std::filesystem::path(name_or_path).filename().string();
  if (files.name.empty()) files.name = dir.parent_path().filename().string();
  files.train_images = find_file(dir, {"train-images-idx3-ubyte", "train-images.idx3-ubyte"});
  files.test_images = find_file(dir, {"t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"});
  return files;
}

std::vector<Index> epoch_permutation(Index n, const BatchPlan& plan, int epoch) {
  std::vector<Index> order(static_cast<size_t>(n));
  for (Index k = 0; k < n; ++k) order[static_cast<size_t>(k)] = k;
  RandomStream rng(mix64(plan.seed) ^ mix64(static_cast<std::uint64_t>(epoch) + 1));
  for (Index k = n - 1; k > 0; --k) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(k) + 1));
    std::swap(order[static_cast<size_t>(k)], order[static_cast<size_t>(j)]);
  }
  return order;
}

std::vector<std::vector<Index>> batch_indices(Index n, const BatchPlan& plan,
                                              int epoch) {
  if (n <= 0) throw Error(ErrorKind::kInvalidArgument, "batches: empty dataset");
  if (plan.batch_size < 1) {
    throw Error(ErrorKind::kInvalidArgument, "batches: batch size must be >= 1");
  }
  const auto order = epoch_permutation(n, plan, epoch);
  std::vector<std::vector<Index>> out;
  for (Index start = 0; start < n; start += plan.batch_size) {
    const Index end = std::min(n, start + plan.batch_size);
    out.emplace_back(order.begin() + start, order.begin() + end);
  }
  return out;
}

std::vector<RowMatrix<float>> batches(const Dataset& dataset,
                                      const BatchPlan& plan, int epoch) {
  std::vector<RowMatrix<float>> out;
  for (const auto& rows : batch_indices(dataset.size(), plan, epoch)) {
    out.push_back(gather_rows<float>(dataset.images, rows));
  }
  return out;
}

}  // namespace erbm

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
#include "erbm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "erbm/error.hpp"

namespace erbm {

namespace {

class Writer {
 public:
  void u32(std::uint32_t x) { put(x, 4); }
  void u64(std::uint64_t x) { put(x, 8); }
  void f64(double x) { put(std::bit_cast<std::uint64_t>(x), 8); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  void put(std::uint64_t x, int width) {
    for (int k = 0; k < width; ++k) {
      bytes_.push_back(static_cast<char>((x >> (8 * k)) & 0xFF));
    }
  }
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::uint64_t get(int width) {
    if (remaining() < static_cast<size_t>(width)) {
      throw Error(ErrorKind::kParse, "checkpoint truncated");
    }
    std::uint64_t x = 0;
    for (int k = 0; k < width; ++k) {
      x |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++]))
           << (8 * k);
    }
    return x;
  }
  std::vector<char> bytes_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  p.check_consistent();
  Writer out;
  std::vector<char> bytes(kCheckpointMagic.begin(), kCheckpointMagic.end());
  out.u32(kCheckpointVersion);
  out.u64(static_cast<std::uint64_t>(p.visible_count()));
  out.u64(static_cast<std::uint64_t>(p.hidden_count()));
  out.u64(ckpt.seed);
  out.u64(ckpt.epochs);
  for (Index i = 0; i < p.visible_count(); ++i) {
    for (Index j = 0; j < p.hidden_count(); ++j) out.f64(p.weights(i, j));
  }
  for (Index i = 0; i < p.visible_count(); ++i) out.f64(p.visible_bias[i]);
  for (Index j = 0; j < p.hidden_count(); ++j) out.f64(p.hidden_bias[j]);
  bytes.insert(bytes.end(), out.bytes().begin(), out.bytes().end());

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(file)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < kCheckpointMagic.size() ||
      std::memcmp(bytes.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0) {
    throw Error(ErrorKind::kParse, "not a checkpoint (bad magic): " + path.string());
  }
  Reader r(std::vector<char>(bytes.begin() + kCheckpointMagic.size(), bytes.end()));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kParse,
                "unsupported checkpoint version " + std::to_string(version));
  }
  const auto m = static_cast<Index>(r.u64());
  const auto n = static_cast<Index>(r.u64());
  Checkpoint ckpt;
  ckpt.seed = r.u64();
  ckpt.epochs = r.u64();
  const auto expected = static_cast<size_t>(8 * (m * n + m + n));
  if (m < 1 || n < 1 || r.remaining() != expected) {
    throw Error(ErrorKind::kParse, "checkpoint payload size mismatch");
  }
  auto& p = ckpt.params;
  p.weights.resize(m, n);
  p.visible_bias.resize(m);
  p.hidden_bias.resize(n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) p.weights(i, j) = r.f64();
  }
  for (Index i = 0; i < m; ++i) p.visible_bias[i] = r.f64();
  for (Index j = 0; j < n; ++j) p.hidden_bias[j] = r.f64();
  return ckpt;
}

}  // namespace erbm

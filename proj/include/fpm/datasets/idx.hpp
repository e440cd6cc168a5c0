/* Copyright 2026 The fpmkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fpm/datasets/record.hpp"
#include "fpm/error.hpp"
#include "fpm/image.hpp"

// IDX files (MNIST): big-endian u32 magic 0x000008NN where NN is the number of
// dimensions, one big-endian u32 per dimension, then unsigned bytes. Gzipped
// files are read transparently.

namespace fpm {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

class GzReader {
 public:
  explicit GzReader(const std::filesystem::path& path)
      : path_(path), file_(gzopen(path.string().c_str(), "rb")) {
    if (!file_) throw IoError("cannot open " + path.string());
  }
  ~GzReader() {
    if (file_) gzclose(file_);
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read(void* dst, std::size_t n) {
    auto* out = static_cast<unsigned char*>(dst);
    while (n > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
      const int got = gzread(file_, out, chunk);
      if (got <= 0) throw IoError(path_.string() + ": truncated IDX payload");
      out += got;
      n -= static_cast<std::size_t>(got);
    }
  }

  std::uint32_t read_be32() {
    std::array<unsigned char, 4> b{};
    read(b.data(), b.size());
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  }

 private:
  std::filesystem::path path_;
  gzFile file_;
};

}  // namespace detail

/// Raw IDX tensor of unsigned bytes.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
  std::uint32_t declared = 0;  // leading dimension before any limit
};

inline IdxTensor read_idx(const std::filesystem::path& path, std::uint32_t expected_magic,
                          std::optional<std::uint32_t> limit = std::nullopt) {
  detail::GzReader in(path);
  const std::uint32_t magic = in.read_be32();
  if (magic != expected_magic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "unexpected IDX magic 0x%08x (expected 0x%08x)", magic,
                  expected_magic);
    throw IoError(path.string() + ": " + buf);
  }
  IdxTensor t;
  t.dims.resize(magic & 0xffu);
  for (auto& d : t.dims) d = in.read_be32();
  if (!t.dims.empty()) t.declared = t.dims[0];
  if (limit && !t.dims.empty() && *limit < t.dims[0]) t.dims[0] = *limit;
  std::size_t total = 1;
  for (auto d : t.dims) total *= d;
  t.data.resize(total);
  in.read(t.data.data(), total);
  return t;
}

/// Parses an IDX image file and, optionally, its label file. Pixels are
/// scaled by 1/255. `limit` keeps only the first records.
inline std::vector<DatasetRecord> parse_idx(const std::filesystem::path& images,
                                            const std::optional<std::filesystem::path>& labels = {},
                                            std::optional<std::uint32_t> limit = std::nullopt) {
  const IdxTensor img = read_idx(images, kIdxImagesMagic, limit);
  const std::uint32_t count = img.dims[0];
  const int rows = static_cast<int>(img.dims[1]);
  const int cols = static_cast<int>(img.dims[2]);
  if (count > 0 && (rows < 1 || cols < 1)) throw IoError(images.string() + ": empty image dims");

  std::optional<IdxTensor> lab;
  if (labels) {
    lab = read_idx(*labels, kIdxLabelsMagic, limit);
    if (lab->declared != img.declared) {
      throw IoError("IDX image/label count mismatch: " + std::to_string(img.declared) +
                    " images, " + std::to_string(lab->declared) + " labels");
    }
  }

  std::string stem = images.filename().string();
  if (stem.size() > 3 && stem.ends_with(".gz")) stem.resize(stem.size() - 3);

  std::vector<DatasetRecord> records;
  records.reserve(count);
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  for (std::uint32_t n = 0; n < count; ++n) {
    RealImage image(Extent{rows, cols});
    for (std::size_t i = 0; i < plane; ++i) image[i] = img.data[n * plane + i] / 255.0;
    int label = kUnlabeled;
    if (lab) {
      label = lab->data[n];
      if (label >= kClassCount) {
        throw IoError(labels->string() + ": label " + std::to_string(label) + " out of range");
      }
    }
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, ":%06u", n);
    records.push_back({{std::move(image)}, label, stem + idbuf});
  }
  return records;
}

}  // namespace fpm

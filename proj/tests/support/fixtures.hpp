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

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fpm/cli/app.hpp"
#include "fpm/image.hpp"
#include "synthetic.hpp"

namespace fpm::testing {

namespace fs = std::filesystem;

/// Directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fpm") {
    static std::uint64_t counter = 0;
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

/// Writes an IDX image file (magic 0x803) from images with values in [0, 1].
inline void write_idx_images(const std::string& path, const std::vector<RealImage>& images,
                             std::uint32_t magic = 0x00000803) {
  std::ofstream out(path, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, static_cast<std::uint32_t>(images.size()));
  put_be32(out, static_cast<std::uint32_t>(images.front().height()));
  put_be32(out, static_cast<std::uint32_t>(images.front().width()));
  for (const auto& img : images) {
    for (double v : img) out.put(static_cast<char>(std::lround(v * 255.0)));
  }
}

inline void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  put_be32(out, 0x00000801);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) out.put(static_cast<char>(l));
}

/// Synthetic digits quantized to 8 bits, as they come back out of an IDX file.
inline std::vector<RealImage> quantized_digits(int count, std::uint64_t seed0 = 1000) {
  std::vector<RealImage> out;
  for (int i = 0; i < count; ++i) {
    RealImage img = synthetic_digit(seed0 + static_cast<std::uint64_t>(i));
    for (double& v : img) v = std::lround(v * 255.0) / 255.0;
    out.push_back(std::move(img));
  }
  return out;
}

/// Writes a labelled IDX image/label pair of `count` synthetic digits.
inline void write_digit_dataset(const TempDir& dir, int count, std::uint64_t seed0 = 1000) {
  write_idx_images(dir / "images.idx", quantized_digits(count, seed0));
  std::vector<int> labels;
  for (int i = 0; i < count; ++i) labels.push_back(i % 10);
  write_idx_labels(dir / "labels.idx", labels);
}

struct CliResult {
  int code;
  std::string out;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  const int code = cli::run(args, out);
  return {code, out.str()};
}

inline std::vector<std::uint8_t> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace fpm::testing

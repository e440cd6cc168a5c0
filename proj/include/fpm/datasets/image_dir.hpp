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

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "fpm/datasets/record.hpp"
#include "fpm/error.hpp"
#include "fpm/image.hpp"

namespace fpm {

enum class ColorMode { gray, rgb };

inline std::string to_string(ColorMode m) { return m == ColorMode::gray ? "gray" : "rgb"; }

inline ColorMode color_mode_from_string(const std::string& s) {
  if (s == "gray") return ColorMode::gray;
  if (s == "rgb") return ColorMode::rgb;
  throw ConfigError("unknown color mode '" + s + "' (expected gray or rgb)");
}

/// Bilinear resampling with pixel centers at half-integer positions and edge
/// clamping (no antialiasing prefilter).
inline RealImage resize_bilinear(const RealImage& in, Extent out_extent) {
  RealImage out(out_extent);
  const double sy = static_cast<double>(in.height()) / out_extent.height;
  const double sx = static_cast<double>(in.width()) / out_extent.width;
  for (int r = 0; r < out_extent.height; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, in.height() - 1.0);
    const int y0 = static_cast<int>(std::floor(y));
    const int y1 = std::min(y0 + 1, in.height() - 1);
    const double wy = y - y0;
    for (int c = 0; c < out_extent.width; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, in.width() - 1.0);
      const int x0 = static_cast<int>(std::floor(x));
      const int x1 = std::min(x0 + 1, in.width() - 1);
      const double wx = x - x0;
      const double top = (1.0 - wx) * in(y0, x0) + wx * in(y0, x1);
      const double bottom = (1.0 - wx) * in(y1, x0) + wx * in(y1, x1);
      out(r, c) = (1.0 - wy) * top + wy * bottom;
    }
  }
  return out;
}

/// ITU-R BT.601 luma. Integer weights keep white at exactly 1.
inline RealImage luma(const RealImage& red, const RealImage& green, const RealImage& blue) {
  RealImage out(red.extent());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (299.0 * red[i] + 587.0 * green[i] + 114.0 * blue[i]) / 1000.0;
  }
  return out;
}

/// Decodes a raster file into R, G, B planes (one plane for grayscale files)
/// scaled to [0, 1]. Returns an empty vector when the file cannot be decoded.
inline std::vector<RealImage> decode_image(const std::filesystem::path& path) {
  const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty() || mat.dims != 2) return {};
  double scale = 0.0;
  switch (mat.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    default: return {};
  }
  const int channels = mat.channels();
  if (channels != 1 && channels != 3 && channels != 4) return {};
  cv::Mat as_double;
  mat.convertTo(as_double, CV_MAKETYPE(CV_64F, channels), scale);

  const Extent e{mat.rows, mat.cols};
  const int planes = channels == 1 ? 1 : 3;
  std::vector<RealImage> out(static_cast<std::size_t>(planes), RealImage(e));
  for (int r = 0; r < e.height; ++r) {
    const double* row = as_double.ptr<double>(r);
    for (int c = 0; c < e.width; ++c) {
      if (planes == 1) {
        out[0](r, c) = row[c];
      } else {
        // OpenCV stores BGR(A).
        out[0](r, c) = row[c * channels + 2];
        out[1](r, c) = row[c * channels + 1];
        out[2](r, c) = row[c * channels + 0];
      }
    }
  }
  return out;
}

struct ImageDirResult {
  std::vector<DatasetRecord> records;
  std::vector<std::string> class_names;
  std::vector<std::filesystem::path> skipped;
};

/// Loads `root/<class>/<image>` in lexicographic order. Class labels follow the
/// sorted subdirectory names. Undecodable files are skipped and listed.
inline ImageDirResult load_image_dir(const std::filesystem::path& root, int size,
                                     ColorMode color = ColorMode::gray) {
  namespace fs = std::filesystem;
  if (size < 1) throw ConfigError("resize target must be >= 1 pixel");
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());

  ImageDirResult result;
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw ConfigError(root.string() + " has no class subdirectories");
  if (class_dirs.size() > static_cast<std::size_t>(kClassCount)) {
    throw ConfigError(root.string() + " has " + std::to_string(class_dirs.size()) +
                      " classes; at most " + std::to_string(kClassCount) + " are supported");
  }

  const Extent target{size, size};
  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    const auto class_name = class_dirs[label].filename().string();
    result.class_names.push_back(class_name);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[label])) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::size_t loaded = 0;
    for (const auto& file : files) {
      std::vector<RealImage> planes = decode_image(file);
      if (planes.empty()) {
        result.skipped.push_back(file);
        continue;
      }
      for (auto& p : planes) {
        p = resize_bilinear(p, target);
        for (double& v : p) v = std::clamp(v, 0.0, 1.0);
      }
      if (planes.size() == 1 && color == ColorMode::rgb) {
        planes = {planes[0], planes[0], planes[0]};
      } else if (planes.size() == 3 && color == ColorMode::gray) {
        planes = {luma(planes[0], planes[1], planes[2])};
      }
      result.records.push_back(
          {std::move(planes), static_cast<int>(label), class_name + "/" + file.filename().string()});
      ++loaded;
    }
    if (loaded == 0) throw ConfigError("class directory " + class_dirs[label].string() +
                                       " contains no decodable images");
  }
  return result;
}

}  // namespace fpm

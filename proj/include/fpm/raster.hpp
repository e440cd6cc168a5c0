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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fpm/error.hpp"
#include "fpm/fft.hpp"
#include "fpm/image.hpp"
#include "fpm/pupil.hpp"

// 8-bit grayscale rendering for diagnostics: contact sheets of measurement
// channels and pupil contours over a log-magnitude spectrum.

namespace fpm {

using GrayImage = Image<std::uint8_t>;

/// Binary PGM (P5).
inline void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(image.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

/// Min-max scaling to 0..255; a flat image maps to 0.
inline GrayImage to_gray(const RealImage& image) {
  const auto [lo, hi] = std::minmax_element(image.begin(), image.end());
  const double span = *hi - *lo;
  GrayImage out(image.extent(), 0);
  if (span <= 0.0) return out;
  for (std::size_t i = 0; i < image.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (image[i] - *lo) / span));
  }
  return out;
}

inline GrayImage upscale(const GrayImage& image, int factor) {
  if (factor <= 1) return image;
  GrayImage out(Extent{image.height() * factor, image.width() * factor});
  for (int r = 0; r < out.height(); ++r)
    for (int c = 0; c < out.width(); ++c) out(r, c) = image(r / factor, c / factor);
  return out;
}

/// Tiles `images` (each normalized on its own) row-major into `columns`
/// columns, separated by 1-pixel white gutters.
inline GrayImage contact_sheet(const std::vector<RealImage>& images, int columns) {
  if (images.empty()) throw ConfigError("contact sheet needs at least one image");
  if (columns < 1) throw ConfigError("contact sheet needs at least one column");
  const Extent tile = images.front().extent();
  const int n = static_cast<int>(images.size());
  const int rows = (n + columns - 1) / columns;
  GrayImage sheet(Extent{rows * (tile.height + 1) - 1, columns * (tile.width + 1) - 1}, 255);
  for (int i = 0; i < n; ++i) {
    require_same_extent(images[static_cast<std::size_t>(i)].extent(), tile, "contact_sheet");
    const GrayImage g = to_gray(images[static_cast<std::size_t>(i)]);
    const int top = (i / columns) * (tile.height + 1);
    const int left = (i % columns) * (tile.width + 1);
    for (int r = 0; r < tile.height; ++r)
      for (int c = 0; c < tile.width; ++c) sheet(top + r, left + c) = g(r, c);
  }
  return sheet;
}

/// Boundary of a pupil: support bins with a 4-neighbour outside the support
/// or outside the spectrum.
inline Image<std::uint8_t> pupil_contour(const PupilMask& mask) {
  const auto& s = mask.support();
  const int h = s.height();
  const int w = s.width();
  auto inside = [&](int r, int c) { return r >= 0 && r < h && c >= 0 && c < w && s(r, c) != 0; };
  Image<std::uint8_t> contour(s.extent(), 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!inside(r, c)) continue;
      if (!inside(r - 1, c) || !inside(r + 1, c) || !inside(r, c - 1) || !inside(r, c + 1)) {
        contour(r, c) = 1;
      }
    }
  }
  return contour;
}

struct MaskOverlay {
  /// Log-magnitude spectrum dimmed to 0..127 with contours drawn in 128..255.
  GrayImage raster;
  /// One contour image per LED, row-major LED order.
  std::vector<Image<std::uint8_t>> contours;
};

/// Pupil layout over the centered log-magnitude spectrum of `image`. The
/// on-axis contour is drawn at full intensity, the others progressively dimmer.
inline MaskOverlay render_mask_overlay(const LedGrid& grid, const RealImage& image) {
  const ComplexField spectrum = fft2(to_complex(image));
  RealImage logmag(image.extent());
  for (std::size_t i = 0; i < logmag.size(); ++i) logmag[i] = std::log1p(std::abs(spectrum[i]));
  const GrayImage base = to_gray(logmag);

  MaskOverlay overlay;
  overlay.raster = GrayImage(image.extent());
  for (std::size_t i = 0; i < base.size(); ++i) overlay.raster[i] = base[i] / 2;

  const auto masks = make_pupil_masks(grid, image.extent());
  const int center = grid.on_axis_index();
  for (int k = 0; k < static_cast<int>(masks.size()); ++k) {
    overlay.contours.push_back(pupil_contour(masks[static_cast<std::size_t>(k)]));
  }
  // Draw the on-axis contour last so it stays visible where contours cross.
  auto draw = [&](int k) {
    const int distance = std::abs(k / grid.side() - center / grid.side()) +
                         std::abs(k % grid.side() - center % grid.side());
    const auto level = static_cast<std::uint8_t>(std::max(128, 255 - 24 * distance));
    const auto& contour = overlay.contours[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < contour.size(); ++i)
      if (contour[i] != 0) overlay.raster[i] = level;
  };
  for (int k = 0; k < static_cast<int>(masks.size()); ++k)
    if (k != center) draw(k);
  draw(center);
  return overlay;
}

}  // namespace fpm

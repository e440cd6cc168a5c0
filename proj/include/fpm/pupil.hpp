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

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fpm/error.hpp"
#include "fpm/fft.hpp"
#include "fpm/image.hpp"

namespace fpm {

/// Square arrangement of LEDs, each mapped to one pupil disk in the spectrum.
/// All quantities are in frequency pixels.
class LedGrid {
 public:
  LedGrid() = default;
  LedGrid(int side, int spacing, int radius) : side_(side), spacing_(spacing), radius_(radius) {
    if (side < 1 || side % 2 == 0) {
      throw ConfigError("grid side must be odd and >= 1, got " + std::to_string(side));
    }
    if (spacing < 1) throw ConfigError("grid spacing must be > 0, got " + std::to_string(spacing));
    if (radius < 1) throw ConfigError("pupil radius must be >= 1, got " + std::to_string(radius));
  }

  /// Spacing defaults to the pupil radius, which makes neighbouring pupils overlap.
  static LedGrid with_default_spacing(int side, int radius) { return LedGrid(side, radius, radius); }

  int side() const noexcept { return side_; }
  int spacing() const noexcept { return spacing_; }
  int radius() const noexcept { return radius_; }
  int count() const noexcept { return side_ * side_; }
  /// Row-major index of the on-axis LED.
  int on_axis_index() const noexcept { return count() / 2; }

  friend bool operator==(const LedGrid&, const LedGrid&) = default;

 private:
  int side_ = 1;
  int spacing_ = 1;
  int radius_ = 1;
};

struct LedIndex {
  int row = 0;
  int col = 0;
};

struct FrequencyPoint {
  int fy = 0;
  int fx = 0;
  friend bool operator==(const FrequencyPoint&, const FrequencyPoint&) = default;
};

/// Binary disk in centered-spectrum coordinates.
class PupilMask {
 public:
  PupilMask(Extent extent, FrequencyPoint center, int radius)
      : center_(center), radius_(radius), support_(extent, 0) {
    const long r2 = static_cast<long>(radius) * radius;
    for (int i = 0; i < extent.height; ++i) {
      const long dy = centered_frequency(i, extent.height) - center.fy;
      for (int j = 0; j < extent.width; ++j) {
        const long dx = centered_frequency(j, extent.width) - center.fx;
        if (dy * dy + dx * dx <= r2) support_(i, j) = 1;
      }
    }
  }

  Extent extent() const noexcept { return support_.extent(); }
  FrequencyPoint center() const noexcept { return center_; }
  int radius() const noexcept { return radius_; }
  const Image<std::uint8_t>& support() const noexcept { return support_; }
  bool contains(int row, int col) const noexcept { return support_(row, col) != 0; }

  std::size_t popcount() const {
    return static_cast<std::size_t>(
        std::count(support_.begin(), support_.end(), std::uint8_t{1}));
  }

  /// Zeroes every bin of a centered spectrum outside the support.
  void apply(ComplexField& centered_spectrum) const {
    require_same_extent(centered_spectrum.extent(), extent(), "PupilMask::apply");
    for (std::size_t i = 0; i < support_.size(); ++i) {
      if (support_[i] == 0) centered_spectrum[i] = 0.0;
    }
  }

 private:
  FrequencyPoint center_;
  int radius_;
  Image<std::uint8_t> support_;
};

inline FrequencyPoint led_center(const LedGrid& grid, LedIndex index) {
  const int half = (grid.side() - 1) / 2;
  return {(index.row - half) * grid.spacing(), (index.col - half) * grid.spacing()};
}

inline PupilMask make_pupil_mask(const LedGrid& grid, LedIndex index, Extent extent) {
  if (index.row < 0 || index.row >= grid.side() || index.col < 0 || index.col >= grid.side()) {
    throw ConfigError("LED index (" + std::to_string(index.row) + ", " +
                      std::to_string(index.col) + ") outside a " + std::to_string(grid.side()) +
                      "x" + std::to_string(grid.side()) + " grid");
  }
  return PupilMask(extent, led_center(grid, index), grid.radius());
}

/// All masks in row-major LED order. Every mask must keep at least one bin
/// after clipping, otherwise its measurement would be identically zero.
inline std::vector<PupilMask> make_pupil_masks(const LedGrid& grid, Extent extent) {
  std::vector<PupilMask> masks;
  masks.reserve(static_cast<std::size_t>(grid.count()));
  for (int r = 0; r < grid.side(); ++r) {
    for (int c = 0; c < grid.side(); ++c) {
      masks.push_back(make_pupil_mask(grid, {r, c}, extent));
      if (masks.back().popcount() == 0) {
        throw ConfigError("pupil of LED (" + std::to_string(r) + ", " + std::to_string(c) +
                          ") lies entirely outside the " + to_string(extent) + " spectrum");
      }
    }
  }
  return masks;
}

/// True when the union of all pupils covers every spectral bin.
inline bool covers_spectrum(const LedGrid& grid, Extent extent) {
  Image<std::uint8_t> covered(extent, 0);
  for (const auto& mask : make_pupil_masks(grid, extent)) {
    for (std::size_t i = 0; i < covered.size(); ++i) covered[i] |= mask.support()[i];
  }
  return std::all_of(covered.begin(), covered.end(), [](std::uint8_t v) { return v != 0; });
}

}  // namespace fpm

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
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpm/error.hpp"

namespace fpm {

struct Extent {
  int height = 0;
  int width = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  friend bool operator==(const Extent&, const Extent&) = default;
};

inline std::string to_string(Extent e) {
  return std::to_string(e.height) + "x" + std::to_string(e.width);
}

/// Dense row-major 2-D array. Used for spatial images, spectra and masks.
template <class T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  explicit Image(Extent extent, T fill = T{}) : extent_(extent) {
    if (extent.height < 1 || extent.width < 1) {
      throw ConfigError("image extent must be at least 1x1, got " + to_string(extent));
    }
    values_.assign(extent.size(), fill);
  }
  Image(Extent extent, std::vector<T> values) : extent_(extent), values_(std::move(values)) {
    if (extent.height < 1 || extent.width < 1) {
      throw ConfigError("image extent must be at least 1x1, got " + to_string(extent));
    }
    if (values_.size() != extent.size()) {
      throw ConfigError("image of extent " + to_string(extent) + " given " +
                        std::to_string(values_.size()) + " values");
    }
  }

  Extent extent() const noexcept { return extent_; }
  int height() const noexcept { return extent_.height; }
  int width() const noexcept { return extent_.width; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& operator()(int row, int col) noexcept {
    return values_[static_cast<std::size_t>(row) * extent_.width + col];
  }
  const T& operator()(int row, int col) const noexcept {
    return values_[static_cast<std::size_t>(row) * extent_.width + col];
  }
  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Extent extent_;
  std::vector<T> values_;
};

using ComplexField = Image<std::complex<double>>;
/// Real intensities. Non-negativity is checked where the model requires it
/// (measurements, estimates), not by the type, since gradients share it.
using RealImage = Image<double>;

inline bool is_finite(const RealImage& image) {
  return std::all_of(image.begin(), image.end(), [](double v) { return std::isfinite(v); });
}

inline bool is_finite(const ComplexField& field) {
  return std::all_of(field.begin(), field.end(), [](const std::complex<double>& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

inline bool is_non_negative(const RealImage& image) {
  return std::all_of(image.begin(), image.end(), [](double v) { return v >= 0.0; });
}

inline ComplexField to_complex(const RealImage& image) {
  ComplexField out(image.extent());
  std::transform(image.begin(), image.end(), out.begin(),
                 [](double v) { return std::complex<double>(v, 0.0); });
  return out;
}

inline void require_same_extent(Extent a, Extent b, const char* what) {
  if (a != b) {
    throw ConfigError(std::string(what) + ": extent mismatch " + to_string(a) + " vs " +
                      to_string(b));
  }
}

inline double sum_of_squares(const RealImage& image) {
  double acc = 0.0;
  for (double v : image) acc += v * v;
  return acc;
}

inline double sum_of_squares(const ComplexField& field) {
  double acc = 0.0;
  for (const auto& v : field) acc += std::norm(v);
  return acc;
}

}  // namespace fpm

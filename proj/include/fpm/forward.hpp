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

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpm/error.hpp"
#include "fpm/fft.hpp"
#include "fpm/image.hpp"
#include "fpm/multiplex.hpp"
#include "fpm/noise.hpp"
#include "fpm/pupil.hpp"

namespace fpm {

/// Acquisition parameters needed to rebuild the forward operator of a stack.
struct StackMetadata {
  LedGrid grid;
  NoiseSpec noise;
  std::optional<MultiplexMatrix> multiplex;
  std::string source_id;
};

/// K band-limited intensity images of one specimen, at full spatial resolution.
/// Single-LED stacks are in row-major LED order; multiplexed stacks hold one
/// channel per row of the multiplex matrix.
struct MeasurementStack {
  Extent extent;
  std::vector<RealImage> channels;
  StackMetadata meta;

  int count() const noexcept { return static_cast<int>(channels.size()); }
  bool multiplexed() const noexcept { return meta.multiplex.has_value(); }

  const RealImage& on_axis() const {
    if (multiplexed()) throw ConfigError("multiplexed stacks have no on-axis channel");
    if (channels.size() != static_cast<std::size_t>(meta.grid.count())) {
      throw ConfigError("stack channel count does not match its LED grid");
    }
    return channels[static_cast<std::size_t>(meta.grid.on_axis_index())];
  }
};

namespace detail {

inline RealImage modulus(const ComplexField& field) {
  RealImage out(field.extent());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = std::abs(field[i]);
  return out;
}

inline RealImage band_limited_intensity(const ComplexField& spectrum, const PupilMask& mask) {
  ComplexField masked = spectrum;
  mask.apply(masked);
  return modulus(ifft2(masked));
}

inline std::vector<RealImage> single_led_measurements(const ComplexField& u,
                                                      std::span<const PupilMask> masks) {
  const ComplexField spectrum = fft2(u);
  std::vector<RealImage> out;
  out.reserve(masks.size());
  for (const auto& mask : masks) out.push_back(band_limited_intensity(spectrum, mask));
  return out;
}

}  // namespace detail

/// |F^-1 M F u| plus optional noise, clamped at zero.
inline RealImage forward_single(const ComplexField& u, const PupilMask& mask,
                                const NoiseSpec& noise) {
  require_same_extent(u.extent(), mask.extent(), "forward_single");
  RealImage f = detail::band_limited_intensity(fft2(u), mask);
  add_noise(f, noise);
  return f;
}

/// One measurement per LED; channel k draws noise from stream k of `noise`.
inline MeasurementStack forward_stack(const ComplexField& u, const LedGrid& grid,
                                      const NoiseSpec& noise, std::string source_id = {}) {
  const auto masks = make_pupil_masks(grid, u.extent());
  MeasurementStack stack{u.extent(), detail::single_led_measurements(u, masks),
                         {grid, noise, std::nullopt, std::move(source_id)}};
  for (std::size_t k = 0; k < stack.channels.size(); ++k) {
    add_noise(stack.channels[k], noise.derive(k));
  }
  return stack;
}

/// Channel k = sum_l beta(k, l) * |F^-1 M_l F u|, noise added once per channel.
inline MeasurementStack forward_multiplexed(const ComplexField& u, const LedGrid& grid,
                                            const MultiplexMatrix& beta, const NoiseSpec& noise,
                                            std::string source_id = {}) {
  if (beta.cols() != grid.count()) {
    throw ConfigError("multiplex matrix has " + std::to_string(beta.cols()) +
                      " columns but the LED grid has " + std::to_string(grid.count()) +
                      " LEDs");
  }
  const auto masks = make_pupil_masks(grid, u.extent());
  const auto singles = detail::single_led_measurements(u, masks);

  MeasurementStack stack{u.extent(), {}, {grid, noise, beta, std::move(source_id)}};
  stack.channels.reserve(static_cast<std::size_t>(beta.rows()));
  for (int k = 0; k < beta.rows(); ++k) {
    RealImage f(u.extent(), 0.0);
    for (int l = 0; l < beta.cols(); ++l) {
      const double w = beta(k, l);
      if (w == 0.0) continue;
      const auto& s = singles[static_cast<std::size_t>(l)];
      for (std::size_t i = 0; i < f.size(); ++i) f[i] += w * s[i];
    }
    add_noise(f, noise.derive(static_cast<std::uint64_t>(k)));
    stack.channels.push_back(std::move(f));
  }
  return stack;
}

inline MeasurementStack forward_stack(const RealImage& u, const LedGrid& grid,
                                      const NoiseSpec& noise, std::string source_id = {}) {
  return forward_stack(to_complex(u), grid, noise, std::move(source_id));
}

inline MeasurementStack forward_multiplexed(const RealImage& u, const LedGrid& grid,
                                            const MultiplexMatrix& beta, const NoiseSpec& noise,
                                            std::string source_id = {}) {
  return forward_multiplexed(to_complex(u), grid, beta, noise, std::move(source_id));
}

}  // namespace fpm

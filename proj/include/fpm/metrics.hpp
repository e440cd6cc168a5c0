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
#include <limits>

#include "fpm/error.hpp"
#include "fpm/image.hpp"

namespace fpm {

inline double mse(const RealImage& a, const RealImage& b) {
  require_same_extent(a.extent(), b.extent(), "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

/// Peak signal-to-noise ratio in dB; +infinity for identical images.
inline double psnr(const RealImage& a, const RealImage& b, double peak = 1.0) {
  if (!(peak > 0.0)) throw ConfigError("psnr: peak must be > 0");
  const double err = mse(a, b);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / err);
}

}  // namespace fpm

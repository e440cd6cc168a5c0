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

#include "fpm/error.hpp"
#include "fpm/image.hpp"

// Anisotropic total variation on forward differences. The difference past the
// last column (row) is zero (Neumann boundary), so every pixel contributes one
// horizontal and one vertical term of sqrt(d^2 + eps^2).

namespace fpm {

inline double tv(const RealImage& u, double eps_abs) {
  if (!is_finite(u)) throw NumericalError("tv: input contains non-finite values");
  const int h = u.height();
  const int w = u.width();
  const double eps2 = eps_abs * eps_abs;
  double acc = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double dx = c + 1 < w ? u(r, c + 1) - u(r, c) : 0.0;
      const double dy = r + 1 < h ? u(r + 1, c) - u(r, c) : 0.0;
      acc += std::sqrt(dx * dx + eps2) + std::sqrt(dy * dy + eps2);
    }
  }
  return acc;
}

inline RealImage tv_gradient(const RealImage& u, double eps_abs) {
  const int h = u.height();
  const int w = u.width();
  const double eps2 = eps_abs * eps_abs;
  // d/dd sqrt(d^2 + eps^2); taken as 0 at the kink when eps == 0.
  auto slope = [eps2](double d) {
    const double n = std::sqrt(d * d + eps2);
    return n > 0.0 ? d / n : 0.0;
  };
  RealImage grad(u.extent(), 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (c + 1 < w) {
        const double s = slope(u(r, c + 1) - u(r, c));
        grad(r, c + 1) += s;
        grad(r, c) -= s;
      }
      if (r + 1 < h) {
        const double s = slope(u(r + 1, c) - u(r, c));
        grad(r + 1, c) += s;
        grad(r, c) -= s;
      }
    }
  }
  return grad;
}

}  // namespace fpm

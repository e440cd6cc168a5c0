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

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "fpm/error.hpp"
#include "fpm/image.hpp"

// Unitary 2-D DFT with spectra in centered layout: frequency (0, 0) sits at
// index (height / 2, width / 2), so bin (i, j) holds frequency
// (i - height / 2, j - width / 2).

namespace fpm {

namespace detail {

// FFTW planning is not thread-safe, execution with the new-array interface is.
// Plans are created once per (shape, direction) under a lock and kept for the
// lifetime of the process. FFTW_ESTIMATE keeps plan selection deterministic.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan plan(int height, int width, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(height, width, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(height) * width);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft_2d(height, width, buf, buf, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw NumericalError("fftw failed to plan a transform");
    plans_.emplace(key, p);
    return p;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void execute_in_place(ComplexField& field, int sign) {
  fftw_plan p = FftPlanCache::instance().plan(field.height(), field.width(), sign);
  auto* buf = reinterpret_cast<fftw_complex*>(field.data());
  fftw_execute_dft(p, buf, buf);
  const double scale = 1.0 / std::sqrt(static_cast<double>(field.size()));
  for (auto& v : field) v *= scale;
}

// Circular shift by (height / 2, width / 2) maps natural order to centered
// order; the inverse shift undoes it for odd sizes as well.
inline ComplexField shift(const ComplexField& in, bool to_centered) {
  const int h = in.height();
  const int w = in.width();
  const int dy = to_centered ? h / 2 : h - h / 2;
  const int dx = to_centered ? w / 2 : w - w / 2;
  ComplexField out(in.extent());
  for (int r = 0; r < h; ++r) {
    const int rr = (r + dy) % h;
    for (int c = 0; c < w; ++c) out(rr, (c + dx) % w) = in(r, c);
  }
  return out;
}

}  // namespace detail

inline ComplexField fftshift(const ComplexField& natural) { return detail::shift(natural, true); }
inline ComplexField ifftshift(const ComplexField& centered) {
  return detail::shift(centered, false);
}

/// Forward unitary DFT; returns a centered spectrum.
inline ComplexField fft2(const ComplexField& field) {
  if (!is_finite(field)) throw NumericalError("fft2: input contains non-finite values");
  ComplexField work = field;
  detail::execute_in_place(work, FFTW_FORWARD);
  return fftshift(work);
}

/// Inverse unitary DFT of a centered spectrum.
inline ComplexField ifft2(const ComplexField& centered_spectrum) {
  if (!is_finite(centered_spectrum)) {
    throw NumericalError("ifft2: input contains non-finite values");
  }
  ComplexField work = ifftshift(centered_spectrum);
  detail::execute_in_place(work, FFTW_BACKWARD);
  return work;
}

/// Frequency coordinate of centered-spectrum row/column `index` along an axis of length `n`.
constexpr int centered_frequency(int index, int n) noexcept { return index - n / 2; }

}  // namespace fpm

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
#include <random>
#include <string>

#include "fpm/error.hpp"
#include "fpm/image.hpp"

namespace fpm {

enum class NoiseKind { none, gaussian };

inline std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::none ? "none" : "gaussian";
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "none") return NoiseKind::none;
  if (s == "gaussian") return NoiseKind::gaussian;
  throw ConfigError("unknown noise kind '" + s + "'");
}

/// splitmix64 finalizer; derives independent seeds for records and channels.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
      throw ConfigError("noise sigma must be finite and >= 0");
    }
    return {NoiseKind::gaussian, sigma, seed};
  }

  bool active() const noexcept { return kind == NoiseKind::gaussian && sigma > 0.0; }

  /// Same distribution, independent stream.
  NoiseSpec derive(std::uint64_t stream) const { return {kind, sigma, mix_seed(seed, stream)}; }

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Adds noise and clamps at zero. A no-op (bit-identical) when inactive.
inline void add_noise(RealImage& image, const NoiseSpec& noise) {
  if (!noise.active()) return;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> dist(0.0, noise.sigma);
  for (double& v : image) v = std::max(0.0, v + dist(rng));
}

}  // namespace fpm

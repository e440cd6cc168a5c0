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
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fpm/error.hpp"

namespace fpm {

/// Non-negative illumination weights: row k gives the intensity of each of the
/// K single-LED channels contributing to multiplexed measurement k.
class MultiplexMatrix {
 public:
  static MultiplexMatrix from_rows(int rows, int cols, std::vector<double> weights) {
    if (cols < 1) throw ConfigError("multiplex matrix needs at least one column");
    if (rows < 1 || rows > cols) {
      throw ConfigError("multiplex rows must satisfy 1 <= m <= k, got m=" +
                        std::to_string(rows) + " k=" + std::to_string(cols));
    }
    if (weights.size() != static_cast<std::size_t>(rows) * cols) {
      throw ConfigError("multiplex matrix " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " given " + std::to_string(weights.size()) +
                        " weights");
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
        throw ConfigError("multiplex weight #" + std::to_string(i) +
                          " must be finite and >= 0, got " + std::to_string(weights[i]));
      }
    }
    return MultiplexMatrix(rows, cols, std::move(weights));
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  double operator()(int row, int col) const noexcept {
    return weights_[static_cast<std::size_t>(row) * cols_ + col];
  }
  const std::vector<double>& weights() const noexcept { return weights_; }

  MultiplexMatrix scaled(double factor) const {
    std::vector<double> w = weights_;
    for (double& v : w) v *= factor;
    return from_rows(rows_, cols_, std::move(w));
  }

  /// Divides by the largest weight so the brightest LED has intensity 1.
  /// An all-zero matrix is returned unchanged.
  MultiplexMatrix max_normalized() const {
    const double peak = *std::max_element(weights_.begin(), weights_.end());
    return peak > 0.0 ? scaled(1.0 / peak) : *this;
  }

  bool is_identity() const noexcept {
    if (rows_ != cols_) return false;
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c)
        if ((*this)(r, c) != (r == c ? 1.0 : 0.0)) return false;
    return true;
  }

  friend bool operator==(const MultiplexMatrix&, const MultiplexMatrix&) = default;

 private:
  MultiplexMatrix(int rows, int cols, std::vector<double> weights)
      : rows_(rows), cols_(cols), weights_(std::move(weights)) {}

  int rows_;
  int cols_;
  std::vector<double> weights_;
};

inline MultiplexMatrix identity_multiplex(int k) {
  if (k < 1) throw ConfigError("identity multiplex needs k >= 1");
  std::vector<double> w(static_cast<std::size_t>(k) * k, 0.0);
  for (int i = 0; i < k; ++i) w[static_cast<std::size_t>(i) * k + i] = 1.0;
  return MultiplexMatrix::from_rows(k, k, std::move(w));
}

/// Uniform [0, 1) random initialization of an m x k matrix.
inline MultiplexMatrix group_multiplex(int k, int m, std::uint64_t seed) {
  if (k < 1) throw ConfigError("group multiplex needs k >= 1");
  if (m < 1 || m > k) {
    throw ConfigError("group multiplex needs 1 <= m <= k, got m=" + std::to_string(m) +
                      " k=" + std::to_string(k));
  }
  std::mt19937_64 rng(seed);
  std::vector<double> w(static_cast<std::size_t>(m) * k);
  // 53 random mantissa bits: exactly representable, strictly below 1.
  for (double& v : w) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return MultiplexMatrix::from_rows(m, k, std::move(w));
}

inline nlohmann::json to_json(const MultiplexMatrix& beta) {
  return {{"m", beta.rows()}, {"k", beta.cols()}, {"weights", beta.weights()}};
}

inline MultiplexMatrix multiplex_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("m") || !doc.contains("k") ||
      !doc.contains("weights")) {
    throw ConfigError("weight document must be an object with m, k and weights");
  }
  if (!doc["m"].is_number_integer() || !doc["k"].is_number_integer() ||
      !doc["weights"].is_array()) {
    throw ConfigError("weight document: m and k must be integers, weights an array");
  }
  std::vector<double> w;
  w.reserve(doc["weights"].size());
  for (const auto& v : doc["weights"]) {
    if (!v.is_number()) throw ConfigError("weight document: non-numeric weight");
    w.push_back(v.get<double>());
  }
  return MultiplexMatrix::from_rows(doc["m"].get<int>(), doc["k"].get<int>(), std::move(w));
}

inline MultiplexMatrix load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open weight file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed weight file " + path.string() + ": " + e.what());
  }
  return multiplex_from_json(doc);
}

inline void save_weights(const MultiplexMatrix& beta, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write weight file " + path.string());
  out << to_json(beta).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace fpm

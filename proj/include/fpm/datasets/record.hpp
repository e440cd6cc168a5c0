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

#include <string>
#include <vector>

#include "fpm/image.hpp"

namespace fpm {

/// Maximum number of classes; all supported datasets have ten.
inline constexpr int kClassCount = 10;

/// Label of a record read without a label file.
inline constexpr int kUnlabeled = -1;

/// Ground-truth image with values in [0, 1]. Grayscale records have one plane,
/// color records three (R, G, B).
struct DatasetRecord {
  std::vector<RealImage> planes;
  int label = kUnlabeled;
  std::string id;

  const RealImage& image() const { return planes.front(); }
  Extent extent() const { return planes.front().extent(); }
};

}  // namespace fpm

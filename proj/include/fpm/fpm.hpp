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

#include "fpm/container.hpp"
#include "fpm/datasets/idx.hpp"
#include "fpm/datasets/image_dir.hpp"
#include "fpm/datasets/record.hpp"
#include "fpm/error.hpp"
#include "fpm/fft.hpp"
#include "fpm/forward.hpp"
#include "fpm/image.hpp"
#include "fpm/metrics.hpp"
#include "fpm/multiplex.hpp"
#include "fpm/noise.hpp"
#include "fpm/pupil.hpp"
#include "fpm/raster.hpp"
#include "fpm/recon.hpp"
#include "fpm/tv.hpp"

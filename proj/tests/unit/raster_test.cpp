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

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "fpm/forward.hpp"
#include "fpm/raster.hpp"

namespace fpm {
namespace {

// Pixels enclosed by a closed contour, counted as the span between the
// leftmost and rightmost contour pixel of each row.
std::size_t enclosed_pixels(const Image<std::uint8_t>& contour) {
  std::size_t total = 0;
  for (int r = 0; r < contour.height(); ++r) {
    int lo = -1, hi = -1;
    for (int c = 0; c < contour.width(); ++c) {
      if (contour(r, c) == 0) continue;
      if (lo < 0) lo = c;
      hi = c;
    }
    if (lo >= 0) total += static_cast<std::size_t>(hi - lo + 1);
  }
  return total;
}

TEST(RasterTest, GrayScalingAndFlatImages) {
  const RealImage ramp(Extent{1, 3}, std::vector<double>{-1.0, 0.0, 1.0});
  const GrayImage g = to_gray(ramp);
  EXPECT_EQ(g[0], 0);
  EXPECT_EQ(g[1], 128);
  EXPECT_EQ(g[2], 255);
  for (auto v : to_gray(RealImage(Extent{2, 2}, 3.0))) EXPECT_EQ(v, 0);
}

TEST(RasterTest, TwentyFiveChannelsMakeAFiveByFiveSheet) {
  std::mt19937_64 rng(1);
  const auto stack = forward_stack(testing::random_image(rng, {28, 28}), LedGrid(5, 5, 5),
                                   NoiseSpec::none());
  const GrayImage sheet = contact_sheet(stack.channels, 5);
  EXPECT_EQ(sheet.extent(), (Extent{5 * 29 - 1, 5 * 29 - 1}));
  // Gutters are white and each tile is the normalized channel.
  EXPECT_EQ(sheet(28, 3), 255);
  EXPECT_EQ(sheet(3, 28), 255);
  const GrayImage tile7 = to_gray(stack.channels[7]);
  for (int r = 0; r < 28; ++r)
    for (int c = 0; c < 28; ++c) ASSERT_EQ(sheet(29 + r, 2 * 29 + c), tile7(r, c));
}

TEST(RasterTest, PartialLastRow) {
  const std::vector<RealImage> imgs(7, RealImage(Extent{3, 4}, 0.0));
  EXPECT_EQ(contact_sheet(imgs, 3).extent(), (Extent{3 * 4 - 1, 3 * 5 - 1}));
  EXPECT_THROW(contact_sheet({}, 3), ConfigError);
  EXPECT_THROW(contact_sheet(imgs, 0), ConfigError);
}

TEST(RasterTest, OverlayHasOneContourPerLedCenteredOnDc) {
  const LedGrid grid(5, 5, 5);
  const MaskOverlay overlay = render_mask_overlay(grid, testing::synthetic_digit(3));
  ASSERT_EQ(overlay.contours.size(), 25u);
  // The on-axis contour is symmetric about the DC bin (14, 14).
  const auto& center = overlay.contours[12];
  EXPECT_EQ(center(14, 9), 1);
  EXPECT_EQ(center(14, 19), 1);
  EXPECT_EQ(center(9, 14), 1);
  EXPECT_EQ(center(19, 14), 1);
  EXPECT_EQ(center(14, 14), 0);
  EXPECT_EQ(overlay.raster(14, 9), 255);
  for (std::size_t i = 0; i < overlay.raster.size(); ++i) {
    bool on_contour = false;
    for (const auto& c : overlay.contours) on_contour = on_contour || c[i] != 0;
    EXPECT_EQ(overlay.raster[i] >= 128, on_contour);
  }
}

TEST(RasterTest, EnclosedPixelsMatchPopcountAndEnumeration) {
  const Extent e{28, 28};
  for (const LedGrid& grid : {LedGrid(5, 5, 5), LedGrid(5, 6, 6), LedGrid(3, 4, 3)}) {
    const MaskOverlay overlay = render_mask_overlay(grid, testing::synthetic_digit(4));
    const auto masks = make_pupil_masks(grid, e);
    for (int k = 0; k < grid.count(); ++k) {
      const PupilMask& m = masks[static_cast<std::size_t>(k)];
      const std::size_t enclosed = enclosed_pixels(overlay.contours[static_cast<std::size_t>(k)]);
      EXPECT_EQ(enclosed, m.popcount()) << "led " << k;
      EXPECT_EQ(static_cast<int>(enclosed),
                oracle::disk_count(e.height, e.width, m.center().fy, m.center().fx, grid.radius()));
    }
  }
}

TEST(RasterTest, PgmHeaderAndPayload) {
  testing::TempDir dir;
  GrayImage img(Extent{2, 3}, 0);
  img(1, 2) = 200;
  write_pgm(img, dir / "x.pgm");
  const auto bytes = testing::file_bytes(dir / "x.pgm");
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 6);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(header.size())), header);
  EXPECT_EQ(bytes.back(), 200);
}

TEST(RasterTest, UpscaleReplicatesPixels) {
  GrayImage img(Extent{1, 2}, std::vector<std::uint8_t>{10, 20});
  const GrayImage big = upscale(img, 3);
  EXPECT_EQ(big.extent(), (Extent{3, 6}));
  EXPECT_EQ(big(2, 2), 10);
  EXPECT_EQ(big(0, 3), 20);
}

}  // namespace
}  // namespace fpm

// Copyright 2026 The cogstream Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cogstream/sampler.hpp"
#include "test_support.hpp"

namespace cogstream {
namespace {

const RasterGeometry kScene{2048, 2048, 512, 512};

// Independent oracle: visit every pixel of the window and collect the tile
// each one belongs to.
std::vector<TileCoord> brute_force_cover(const RasterGeometry& g, const WindowSpec& w) {
  std::set<TileCoord> tiles;
  for (std::uint32_t y = w.row_off; y < w.row_off + w.height; ++y) {
    for (std::uint32_t x = w.col_off; x < w.col_off + w.width; ++x) {
      tiles.insert({x / g.tile_width, y / g.tile_height});
    }
  }
  return {tiles.begin(), tiles.end()};
}

// Pearson chi-square of integer draws in [0, n) against the uniform law,
// using `bins` contiguous bins of (possibly unequal) width.
double chi_square_uniform(const std::vector<std::uint32_t>& draws, std::uint32_t n, int bins) {
  std::vector<double> observed(bins, 0.0), width(bins, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) width[static_cast<std::uint64_t>(v) * bins / n] += 1.0;
  for (auto d : draws) observed[static_cast<std::uint64_t>(d) * bins / n] += 1.0;
  double chi = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double expected = draws.size() * width[b] / n;
    chi += (observed[b] - expected) * (observed[b] - expected) / expected;
  }
  return chi;
}
// 0.999 quantile of chi-square with 9 degrees of freedom.
constexpr double kChi9Critical = 27.877;

TEST(Sampler, FigureCasesAtoD) {
  using V = std::vector<TileCoord>;
  EXPECT_EQ(tiles_for_window(kScene, {0, 0, 512, 512}), (V{{0, 0}}));
  EXPECT_EQ(tiles_for_window(kScene, {256, 256, 512, 512}), (V{{0, 0}, {1, 0}, {0, 1}, {1, 1}}));
  EXPECT_EQ(tiles_for_window(kScene, {100, 100, 200, 200}), (V{{0, 0}}));
  EXPECT_EQ(tiles_for_window(kScene, {0, 0, 1024, 1024}), (V{{0, 0}, {1, 0}, {0, 1}, {1, 1}}));
}

TEST(Sampler, WindowOutOfBounds) {
  EXPECT_COG_ERROR(tiles_for_window(kScene, {1600, 0, 512, 512}), ErrorCode::WindowOutOfBounds);
  EXPECT_COG_ERROR(tiles_for_window(kScene, {0, 0, 0, 10}), ErrorCode::WindowOutOfBounds);
  EXPECT_COG_ERROR(tiles_for_window(kScene, {4000000000u, 0, 512, 512}), ErrorCode::WindowOutOfBounds);
}

TEST(Sampler, CoverMatchesPixelMembershipOracle) {
  // 8x8 tiles, with a partial last row/column.
  for (const RasterGeometry g : {RasterGeometry{256, 256, 32, 32}, RasterGeometry{250, 241, 32, 32}}) {
    SamplerRng rng(99);
    for (int i = 0; i < 1000; ++i) {
      const auto w = static_cast<std::uint32_t>(1 + uniform_below(rng, 100));
      const auto h = static_cast<std::uint32_t>(1 + uniform_below(rng, 100));
      const auto x = static_cast<std::uint32_t>(uniform_below(rng, g.width - w + 1));
      const auto y = static_cast<std::uint32_t>(uniform_below(rng, g.height - h + 1));
      const WindowSpec win{x, y, w, h};
      ASSERT_EQ(tiles_for_window(g, win), brute_force_cover(g, win));
    }
  }
}

TEST(Sampler, RandomSinglePositionAndTooLarge) {
  SamplerRng rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_random(kScene, 2048, rng), (WindowSpec{0, 0, 2048, 2048}));
  EXPECT_COG_ERROR(sample_random(kScene, 4096, rng), ErrorCode::PatchTooLarge);
  EXPECT_COG_ERROR(sample_blocked(kScene, 4096, rng), ErrorCode::PatchTooLarge);
}

TEST(Sampler, RandomOffsetsAreUniform) {
  SamplerRng rng(12345);
  std::vector<std::uint32_t> cols, rows;
  for (int i = 0; i < 10000; ++i) {
    const WindowSpec w = sample_random(kScene, 512, rng);
    ASSERT_LE(w.col_off, 1536u);
    ASSERT_LE(w.row_off, 1536u);
    cols.push_back(w.col_off);
    rows.push_back(w.row_off);
  }
  EXPECT_LT(chi_square_uniform(cols, 1537, 10), kChi9Critical);
  EXPECT_LT(chi_square_uniform(rows, 1537, 10), kChi9Critical);
}

TEST(Sampler, BlockedAlignedWhenPatchEqualsTile) {
  SamplerRng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const WindowSpec w = sample_blocked(kScene, 512, rng);
    ASSERT_EQ(w.col_off % 512, 0u);
    ASSERT_EQ(w.row_off % 512, 0u);
    ASSERT_EQ(tiles_for_window(kScene, w).size(), 1u);
  }
}

TEST(Sampler, BlockedJitterInsideTileIsUniform) {
  SamplerRng rng(8);
  std::vector<std::uint32_t> jx, jy;
  std::set<TileCoord> tiles_seen;
  for (int i = 0; i < 10000; ++i) {
    const WindowSpec w = sample_blocked(kScene, 256, rng);
    const auto cover = tiles_for_window(kScene, w);
    ASSERT_EQ(cover.size(), 1u);
    tiles_seen.insert(cover[0]);
    jx.push_back(w.col_off % 512);
    jy.push_back(w.row_off % 512);
    ASSERT_LE(jx.back(), 256u);
    ASSERT_LE(jy.back(), 256u);
  }
  EXPECT_EQ(tiles_seen.size(), 16u);
  EXPECT_EQ(*std::min_element(jx.begin(), jx.end()), 0u);
  EXPECT_EQ(*std::max_element(jx.begin(), jx.end()), 256u);
  EXPECT_LT(chi_square_uniform(jx, 257, 10), kChi9Critical);
  EXPECT_LT(chi_square_uniform(jy, 257, 10), kChi9Critical);
}

TEST(Sampler, BlockedLargePatchStartsAtTileOrigin) {
  SamplerRng rng(9);
  for (int i = 0; i < 2000; ++i) {
    const WindowSpec w = sample_blocked(kScene, 1024, rng);
    ASSERT_EQ(w.col_off % 512, 0u);
    ASSERT_EQ(w.row_off % 512, 0u);
    ASSERT_EQ(tiles_for_window(kScene, w).size(), 4u);
  }
  // Clamping on a grid that is not a multiple of the patch.
  const RasterGeometry odd{1300, 1300, 512, 512};
  for (int i = 0; i < 500; ++i) {
    const WindowSpec w = sample_blocked(odd, 1024, rng);
    ASSERT_LE(w.col_off + w.width, odd.width);
    ASSERT_TRUE(w.col_off % 512 == 0 || w.col_off == odd.width - 1024);
  }
}

TEST(Sampler, BlockedSkipsEdgeTilesTooSmallForThePatch) {
  const RasterGeometry g{1100, 1100, 512, 512};  // last tile column/row is 76 px wide
  SamplerRng rng(10);
  for (int i = 0; i < 5000; ++i) {
    const WindowSpec w = sample_blocked(g, 512, rng);
    ASSERT_LT(w.col_off, 1024u);
    ASSERT_EQ(tiles_for_window(g, w).size(), 1u);
  }
  bool used_edge = false;
  for (int i = 0; i < 5000; ++i) {
    const WindowSpec w = sample_blocked(g, 64, rng);
    ASSERT_EQ(tiles_for_window(g, w).size(), 1u);
    used_edge |= w.col_off >= 1024;
  }
  EXPECT_TRUE(used_edge);
}

TEST(Sampler, SeededStreamsRepeat) {
  WindowSampler a(kScene, {.blocked = false, .patch_size = 256, .seed = 5});
  WindowSampler b(kScene, {.blocked = false, .patch_size = 256, .seed = 5});
  WindowSampler c(kScene, {.blocked = false, .patch_size = 256, .seed = 6});
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto wa = a.next();
    EXPECT_EQ(wa, b.next());
    differs |= !(wa == c.next());
  }
  EXPECT_TRUE(differs);
}

// Brute force over every offset of one axis of a bounded image: mean number
// of tile columns a p-pixel span covers.
double axis_mean_by_enumeration(std::uint32_t extent, std::uint32_t k, std::uint32_t p) {
  double sum = 0;
  for (std::uint32_t off = 0; off + p <= extent; ++off) {
    std::set<std::uint32_t> cols;
    for (std::uint32_t x = off; x < off + p; ++x) cols.insert(x / k);
    sum += static_cast<double>(cols.size());
  }
  return sum / (extent - p + 1);
}

// Same count over the k phases of an unbounded tile grid (the k^2 offsets of
// one tile in 2-D); equals 1 + (p - 1) / k.
double axis_mean_periodic(std::uint32_t k, std::uint32_t p) {
  double sum = 0;
  for (std::uint32_t phase = 0; phase < k; ++phase) {
    std::set<std::uint32_t> cols;
    for (std::uint32_t x = phase; x < phase + p; ++x) cols.insert(x / k);
    sum += static_cast<double>(cols.size());
  }
  return sum / k;
}

TEST(Sampler, AmplificationMatchesEnumeration) {
  for (std::uint32_t p : {128u, 256u, 512u}) {
    const double axis = axis_mean_by_enumeration(2048, 512, p);
    EXPECT_NEAR(expected_tiles_random(kScene, p), axis * axis, 1e-12);
    EXPECT_NEAR(axis_mean_periodic(512, p), 1.0 + (p - 1.0) / 512.0, 1e-12);
  }
}

TEST(Sampler, MeanTilesPerWindow) {
  SamplerRng rng(2024);
  EXPECT_DOUBLE_EQ(mean_tiles_per_window(kScene, {.blocked = true, .patch_size = 512}, 10000, rng), 1.0);
  EXPECT_DOUBLE_EQ(mean_tiles_per_window(kScene, {.blocked = true, .patch_size = 128}, 10000, rng), 1.0);

  // p = k: the bounded-image mean is within 0.1% of the unbounded (2 - 1/k)^2.
  const double periodic512 = std::pow(axis_mean_periodic(512, 512), 2);
  EXPECT_NEAR(periodic512, (2.0 - 1.0 / 512) * (2.0 - 1.0 / 512), 1e-12);
  const double p512 = mean_tiles_per_window(kScene, {.blocked = false, .patch_size = 512}, 100000, rng);
  EXPECT_NEAR(p512, periodic512, 0.02 * periodic512);

  // p < k: on a 4x4-tile image the last tile boundary is never crossed, so
  // the mean sits well below the unbounded value; compare each regime with
  // its own oracle.
  const double finite256 = std::pow(axis_mean_by_enumeration(2048, 512, 256), 2);
  const double p256 = mean_tiles_per_window(kScene, {.blocked = false, .patch_size = 256}, 100000, rng);
  EXPECT_NEAR(p256, finite256, 0.02 * finite256);

  const RasterGeometry wide{32768, 32768, 512, 512};
  const double periodic256 = std::pow(axis_mean_periodic(512, 256), 2);
  const double wide256 = mean_tiles_per_window(wide, {.blocked = false, .patch_size = 256}, 100000, rng);
  EXPECT_NEAR(wide256, periodic256, 0.02 * periodic256);

  EXPECT_COG_ERROR(mean_tiles_per_window(kScene, {}, 0, rng), ErrorCode::InvalidArgument);
}

TEST(Sampler, AmplificationBound) {
  SamplerRng rng(3);
  for (int i = 0; i < 5000; ++i) {
    for (std::uint32_t p : {128u, 256u, 512u}) {
      ASSERT_LE(tiles_for_window(kScene, sample_random(kScene, p, rng)).size(), 4u);
    }
  }
}

}  // namespace
}  // namespace cogstream

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

#include "cogstream/sampler.hpp"

#include <algorithm>
#include <string>

#include "cogstream/error.hpp"

namespace cogstream {

namespace {

std::string window_text(const WindowSpec& w) {
  return "(" + std::to_string(w.col_off) + ", " + std::to_string(w.row_off) + ", " +
         std::to_string(w.width) + "x" + std::to_string(w.height) + ")";
}

void check_patch(const RasterGeometry& geom, std::uint32_t p) {
  if (p == 0) throw Error(ErrorCode::InvalidArgument, "patch size must be positive");
  if (p > geom.width || p > geom.height) {
    throw Error(ErrorCode::PatchTooLarge, "patch " + std::to_string(p) + " exceeds image " +
                                              std::to_string(geom.width) + "x" +
                                              std::to_string(geom.height));
  }
}

// Number of leading tiles along one axis whose in-image extent is >= p.
std::uint32_t eligible_tiles(std::uint32_t extent, std::uint32_t tile, std::uint32_t p) {
  const std::uint32_t full = extent / tile;
  const std::uint32_t rest = extent % tile;
  return full + (rest >= p ? 1 : 0);
}

}  // namespace

std::vector<TileCoord> tiles_for_window(const RasterGeometry& geom, const WindowSpec& w) {
  if (w.width == 0 || w.height == 0 ||
      static_cast<std::uint64_t>(w.col_off) + w.width > geom.width ||
      static_cast<std::uint64_t>(w.row_off) + w.height > geom.height) {
    throw Error(ErrorCode::WindowOutOfBounds,
                "window " + window_text(w) + " outside " + std::to_string(geom.width) + "x" +
                    std::to_string(geom.height));
  }
  const std::uint32_t tx0 = w.col_off / geom.tile_width;
  const std::uint32_t tx1 = (w.col_off + w.width - 1) / geom.tile_width;
  const std::uint32_t ty0 = w.row_off / geom.tile_height;
  const std::uint32_t ty1 = (w.row_off + w.height - 1) / geom.tile_height;
  std::vector<TileCoord> out;
  out.reserve(static_cast<std::size_t>(tx1 - tx0 + 1) * (ty1 - ty0 + 1));
  for (std::uint32_t ty = ty0; ty <= ty1; ++ty) {
    for (std::uint32_t tx = tx0; tx <= tx1; ++tx) out.push_back({tx, ty});
  }
  return out;
}

std::uint64_t uniform_below(SamplerRng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

WindowSpec sample_random(const RasterGeometry& geom, std::uint32_t p, SamplerRng& rng) {
  check_patch(geom, p);
  const auto col = static_cast<std::uint32_t>(uniform_below(rng, geom.width - p + 1ull));
  const auto row = static_cast<std::uint32_t>(uniform_below(rng, geom.height - p + 1ull));
  return {col, row, p, p};
}

WindowSpec sample_blocked(const RasterGeometry& geom, std::uint32_t p, SamplerRng& rng) {
  check_patch(geom, p);
  const std::uint32_t kx = geom.tile_width;
  const std::uint32_t ky = geom.tile_height;
  if (p <= kx && p <= ky) {
    const auto tx = static_cast<std::uint32_t>(uniform_below(rng, eligible_tiles(geom.width, kx, p)));
    const auto ty = static_cast<std::uint32_t>(uniform_below(rng, eligible_tiles(geom.height, ky, p)));
    const std::uint32_t ext_x = std::min(kx, geom.width - tx * kx);
    const std::uint32_t ext_y = std::min(ky, geom.height - ty * ky);
    const auto jx = static_cast<std::uint32_t>(uniform_below(rng, ext_x - p + 1ull));
    const auto jy = static_cast<std::uint32_t>(uniform_below(rng, ext_y - p + 1ull));
    return {tx * kx + jx, ty * ky + jy, p, p};
  }
  const auto tx = static_cast<std::uint32_t>(uniform_below(rng, geom.tiles_x()));
  const auto ty = static_cast<std::uint32_t>(uniform_below(rng, geom.tiles_y()));
  return {std::min(tx * kx, geom.width - p), std::min(ty * ky, geom.height - p), p, p};
}

WindowSampler::WindowSampler(const RasterGeometry& geom, const SamplerPolicy& policy)
    : geom_(geom), policy_(policy), rng_(policy.seed) {
  check_patch(geom_, policy_.patch_size);
}

WindowSpec WindowSampler::next() {
  return policy_.blocked ? sample_blocked(geom_, policy_.patch_size, rng_)
                         : sample_random(geom_, policy_.patch_size, rng_);
}

double mean_tiles_per_window(const RasterGeometry& geom, const SamplerPolicy& policy,
                             std::size_t n_samples, SamplerRng& rng) {
  if (n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be positive");
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const WindowSpec w = policy.blocked ? sample_blocked(geom, policy.patch_size, rng)
                                        : sample_random(geom, policy.patch_size, rng);
    total += tiles_for_window(geom, w).size();
  }
  return static_cast<double>(total) / static_cast<double>(n_samples);
}

double expected_tiles_random(const RasterGeometry& geom, std::uint32_t p) {
  check_patch(geom, p);
  const auto axis = [p](std::uint32_t extent, std::uint32_t tile) {
    std::uint64_t covered = 0;
    const std::uint32_t positions = extent - p + 1;
    for (std::uint32_t off = 0; off < positions; ++off) {
      covered += (off + p - 1) / tile - off / tile + 1;
    }
    return static_cast<double>(covered) / positions;
  };
  return axis(geom.width, geom.tile_width) * axis(geom.height, geom.tile_height);
}

std::uint32_t max_tiles_per_window(const RasterGeometry& geom, std::uint32_t patch_size) {
  if (patch_size == 0) return 0;
  const auto axis = [patch_size](std::uint32_t k, std::uint32_t tiles) {
    return std::min(tiles, (patch_size + k - 2) / k + 1);
  };
  return axis(geom.tile_width, geom.tiles_x()) * axis(geom.tile_height, geom.tiles_y());
}

}  // namespace cogstream

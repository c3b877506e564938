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

// Window placement over a tiled raster and the exact window→tile cover.
//
// Two placement policies: random (any in-bounds offset) and blocked, which
// places windows so that a patch no larger than a tile is served by exactly
// one tile read, and a larger patch starts on a tile origin.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cogstream/cog.hpp"

namespace cogstream {

struct WindowSpec {
  std::uint32_t col_off = 0;
  std::uint32_t row_off = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

struct TileCoord {
  std::uint32_t tx = 0;
  std::uint32_t ty = 0;

  friend bool operator==(const TileCoord&, const TileCoord&) = default;
  friend auto operator<=>(const TileCoord& a, const TileCoord& b) {
    return a.ty != b.ty ? a.ty <=> b.ty : a.tx <=> b.tx;  // row-major
  }
};

/// Tiles whose pixel extent intersects `window`, row-major.
/// Throws WindowOutOfBounds for empty windows or windows leaving the image.
std::vector<TileCoord> tiles_for_window(const RasterGeometry& geom, const WindowSpec& window);
inline std::vector<TileCoord> tiles_for_window(const CogDescriptor& desc, const WindowSpec& window) {
  return tiles_for_window(desc.geometry(), window);
}

/// Largest |tiles_for_window| any p x p window can have on this grid.
std::uint32_t max_tiles_per_window(const RasterGeometry& geom, std::uint32_t patch_size);

struct SamplerPolicy {
  bool blocked = false;
  std::uint32_t patch_size = 256;
  std::uint64_t seed = 0;
};

/// The generator behind every sampler. mt19937_64 is specified bit-exactly
/// by the standard; bounded draws go through uniform_below() rather than
/// std::uniform_int_distribution so streams match across standard libraries.
using SamplerRng = std::mt19937_64;

/// Uniform integer in [0, n) by rejection; n must be > 0.
std::uint64_t uniform_below(SamplerRng& rng, std::uint64_t n);

/// Offsets uniform over all in-bounds positions. Throws PatchTooLarge.
WindowSpec sample_random(const RasterGeometry& geom, std::uint32_t patch_size, SamplerRng& rng);

/// Picks a tile uniformly, then either jitters the window uniformly inside it
/// (p <= tile) or starts it at the tile origin, clamped into the image
/// (p > tile). For p <= tile only tiles whose in-image extent is at least p on
/// both axes are eligible, so partial edge tiles too small for the patch are
/// never chosen. Throws PatchTooLarge.
WindowSpec sample_blocked(const RasterGeometry& geom, std::uint32_t patch_size, SamplerRng& rng);

/// Deterministic window stream for one policy.
class WindowSampler {
 public:
  WindowSampler(const RasterGeometry& geom, const SamplerPolicy& policy);

  WindowSpec next();
  SamplerRng& rng() noexcept { return rng_; }

 private:
  RasterGeometry geom_;
  SamplerPolicy policy_;
  SamplerRng rng_;
};

/// Empirical mean of |tiles_for_window| over `n_samples` draws using `rng`.
double mean_tiles_per_window(const RasterGeometry& geom, const SamplerPolicy& policy,
                             std::size_t n_samples, SamplerRng& rng);

/// Exact expectation of |tiles_for_window| for uniformly random offsets:
/// the product over both axes of the mean number of tile columns (rows) a
/// p-pixel span covers, enumerated over every valid offset.
double expected_tiles_random(const RasterGeometry& geom, std::uint32_t patch_size);

}  // namespace cogstream

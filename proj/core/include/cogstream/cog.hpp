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

// Tiled GeoTIFF / COG reading, writing and transcoding.
//
// Files are single-image, chunky (PlanarConfiguration=1), uint16 samples,
// one IFD followed by the tile payloads in row-major order. The reader takes
// classic TIFF and BigTIFF in either byte order; the writer emits
// little-endian classic TIFF and switches to BigTIFF above 4 GiB.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogstream/byte_source.hpp"
#include "cogstream/codecs.hpp"

namespace cogstream {

namespace tiff_tag {
inline constexpr std::uint16_t kImageWidth = 256;
inline constexpr std::uint16_t kImageLength = 257;
inline constexpr std::uint16_t kBitsPerSample = 258;
inline constexpr std::uint16_t kCompression = 259;
inline constexpr std::uint16_t kPhotometric = 262;
inline constexpr std::uint16_t kStripOffsets = 273;
inline constexpr std::uint16_t kSamplesPerPixel = 277;
inline constexpr std::uint16_t kStripByteCounts = 279;
inline constexpr std::uint16_t kPlanarConfiguration = 284;
inline constexpr std::uint16_t kPredictor = 317;
inline constexpr std::uint16_t kTileWidth = 322;
inline constexpr std::uint16_t kTileLength = 323;
inline constexpr std::uint16_t kTileOffsets = 324;
inline constexpr std::uint16_t kTileByteCounts = 325;
inline constexpr std::uint16_t kExtraSamples = 338;
inline constexpr std::uint16_t kSampleFormat = 339;
}  // namespace tiff_tag

enum class TiffVariant : std::uint8_t { Classic, BigTiff };

/// Pixel grid and tiling, everything the window geometry needs.
struct RasterGeometry {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t tile_width = 0;
  std::uint32_t tile_height = 0;

  std::uint32_t tiles_x() const noexcept { return (width + tile_width - 1) / tile_width; }
  std::uint32_t tiles_y() const noexcept { return (height + tile_height - 1) / tile_height; }

  friend bool operator==(const RasterGeometry&, const RasterGeometry&) = default;
};

struct TileExtent {
  std::uint64_t offset = 0;
  std::uint64_t byte_count = 0;

  friend bool operator==(const TileExtent&, const TileExtent&) = default;
};

/// Materialised TileOffsets/TileByteCounts, row-major (y outer, x inner).
struct TileIndex {
  std::uint32_t tiles_x = 0;
  std::uint32_t tiles_y = 0;
  std::vector<TileExtent> entries;

  friend bool operator==(const TileIndex&, const TileIndex&) = default;
};

struct CogDescriptor {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t bands = 0;
  std::uint16_t bits_per_sample = 16;
  std::uint16_t sample_format = 1;  // unsigned integer
  std::uint32_t tile_width = 0;
  std::uint32_t tile_height = 0;
  Codec compression = Codec::None;
  Predictor predictor = Predictor::None;
  ByteOrder byte_order = ByteOrder::LittleEndian;
  TiffVariant format_variant = TiffVariant::Classic;
  TileIndex tile_index;

  RasterGeometry geometry() const noexcept { return {width, height, tile_width, tile_height}; }
  std::size_t tile_row_bytes() const noexcept {
    return static_cast<std::size_t>(tile_width) * bands * 2;
  }
  /// Decoded bytes of one full (padded) tile.
  std::size_t tile_bytes() const noexcept { return tile_row_bytes() * tile_height; }
  std::uint64_t payload_bytes() const noexcept;

  friend bool operator==(const CogDescriptor&, const CogDescriptor&) = default;
};

/// Row-major, band-interleaved uint16 pixels.
struct Raster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t bands = 0;
  std::vector<std::uint16_t> samples;

  Raster() = default;
  Raster(std::uint32_t w, std::uint32_t h, std::uint16_t b)
      : width(w), height(h), bands(b), samples(static_cast<std::size_t>(w) * h * b, 0) {}

  std::uint16_t& at(std::uint32_t x, std::uint32_t y, std::uint16_t band) {
    return samples[(static_cast<std::size_t>(y) * width + x) * bands + band];
  }
  std::uint16_t at(std::uint32_t x, std::uint32_t y, std::uint16_t band) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * bands + band];
  }
  std::size_t byte_size() const noexcept { return samples.size() * 2; }

  friend bool operator==(const Raster&, const Raster&) = default;
};

/// One decoded tile, full tile size (edge tiles keep their padding).
using TilePixels = Raster;

/// Reads the header and IFD through `source` with bounded metadata requests.
/// Throws NotTiff, TruncatedHeader, StripedNotTiled, UnsupportedCodec,
/// UnsupportedLayout or InvalidIfd.
CogDescriptor parse_cog(ByteSource& source);

/// Throws TileOutOfRange.
TileExtent tile_byte_extent(const CogDescriptor& desc, std::uint32_t tx, std::uint32_t ty);

/// Decodes the exact bytes of one tile into host-order pixels.
/// Throws CorruptTile or SizeMismatch.
TilePixels decode_tile(const CogDescriptor& desc, std::span<const std::uint8_t> raw,
                       DecodeStats* stats = nullptr);

struct WriteOptions {
  std::uint32_t tile_size = 512;
  ByteOrder byte_order = ByteOrder::LittleEndian;
  /// Unset: classic unless the file would exceed 4 GiB.
  std::optional<TiffVariant> variant;
};

Bytes write_cog(const Raster& pixels, const CompressionScheme& scheme,
                const WriteOptions& options = {});

/// Writes via a temporary file and rename, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Reads every tile of `source` and returns the uncropped-to-image raster.
Raster read_raster(ByteSource& source);

/// Re-encodes `source` once per variant into `out_dir/<stem>_<variant>.tif`.
/// The whole source is decoded before anything is written; on failure no
/// output files remain.
std::vector<std::filesystem::path> transcode(ByteSource& source, std::span<const Variant> variants,
                                             const std::filesystem::path& out_dir,
                                             const std::string& stem,
                                             const WriteOptions& options = {});

/// Deterministic stand-in for a multispectral scene. `smoothness` in [0, 1]:
/// 1 gives a constant field per band, 0 white noise over the full uint16 range.
Raster generate_synthetic_scene(std::uint32_t width, std::uint32_t height, std::uint16_t bands,
                                std::uint64_t seed, double smoothness);

}  // namespace cogstream

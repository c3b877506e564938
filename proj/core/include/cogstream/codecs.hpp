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

// Lossless tile codecs: identity, TIFF-flavoured LZW, Deflate (zlib stream)
// and Zstd, plus the 16-bit horizontal-differencing predictor.

#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cogstream {

using Bytes = std::vector<std::uint8_t>;

enum class Codec : std::uint8_t { None, Lzw, Deflate, Zstd };

enum class Predictor : std::uint16_t { None = 1, Horizontal = 2 };

enum class ByteOrder : std::uint8_t { LittleEndian, BigEndian };

ByteOrder host_byte_order() noexcept;

std::string_view codec_name(Codec codec) noexcept;

/// Compression tag values as they appear in the TIFF Compression (259) field.
std::uint16_t tiff_compression_tag(Codec codec) noexcept;
std::optional<Codec> codec_from_tiff_tag(std::uint16_t tag) noexcept;

/// A codec plus its write-side level. `level` is set exactly for Deflate and
/// Zstd; use the factory functions to keep that invariant.
struct CompressionScheme {
  Codec codec = Codec::None;
  std::optional<int> level;

  static CompressionScheme none() { return {Codec::None, std::nullopt}; }
  static CompressionScheme lzw() { return {Codec::Lzw, std::nullopt}; }
  static CompressionScheme deflate(int level);
  static CompressionScheme zstd(int level = kZstdDefaultLevel);

  /// Horizontal differencing is written for LZW only.
  Predictor default_predictor() const noexcept {
    return codec == Codec::Lzw ? Predictor::Horizontal : Predictor::None;
  }

  /// Throws UnsupportedScheme when the level invariant is broken.
  void validate() const;

  friend bool operator==(const CompressionScheme&, const CompressionScheme&) = default;

  static constexpr int kZstdDefaultLevel = 3;
};

/// The six dataset variants a scene is transcoded into.
enum class Variant : std::uint8_t { None, Deflate1, Deflate6, Deflate9, Lzw, Zstd };

inline constexpr std::array<Variant, 6> kAllVariants = {
    Variant::None, Variant::Deflate1, Variant::Deflate6,
    Variant::Deflate9, Variant::Lzw, Variant::Zstd};

std::string_view variant_name(Variant v) noexcept;
std::optional<Variant> parse_variant(std::string_view name) noexcept;
CompressionScheme scheme_for(Variant v);

/// How raw tile bytes are organised, needed by the predictor.
struct SampleLayout {
  std::size_t row_stride = 0;           // bytes per tile row
  std::uint16_t samples_per_pixel = 1;  // chunky interleave
  Predictor predictor = Predictor::None;
  ByteOrder byte_order = ByteOrder::LittleEndian;  // order of the 16-bit samples
};

struct DecodeStats {
  std::size_t bytes_in = 0;
  std::size_t bytes_out = 0;
  std::chrono::nanoseconds elapsed{0};
};

/// Applies the predictor (if any) to a copy of `raw` and entropy-codes it.
/// `raw.size()` must be a multiple of `layout.row_stride`.
Bytes encode(const CompressionScheme& scheme, std::span<const std::uint8_t> raw,
             const SampleLayout& layout);

/// Inverse of encode(). Returns exactly `expected_len` bytes or throws
/// Corrupt / LengthMismatch.
Bytes decode(Codec codec, std::span<const std::uint8_t> payload, std::size_t expected_len,
             const SampleLayout& layout, DecodeStats* stats = nullptr);

/// In-place 16-bit horizontal differencing per band within each row.
void apply_horizontal_predictor(std::span<std::uint8_t> data, const SampleLayout& layout);
void reverse_horizontal_predictor(std::span<std::uint8_t> data, const SampleLayout& layout);

namespace lzw {

/// TIFF LZW: MSB-first codes of 9..12 bits, Clear=256, EOI=257, early change.
Bytes encode(std::span<const std::uint8_t> input);
/// Decodes until EOI. Throws Corrupt on a malformed or truncated stream and
/// LengthMismatch when the output length differs from `expected_len`.
Bytes decode(std::span<const std::uint8_t> input, std::size_t expected_len);

}  // namespace lzw

}  // namespace cogstream

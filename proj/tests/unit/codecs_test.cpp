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

#include <random>

#include "cogstream/codecs.hpp"
#include "cogstream/cog.hpp"
#include "test_support.hpp"

namespace cogstream {
namespace {

SampleLayout layout_for(const CompressionScheme& s, std::size_t row_stride, std::uint16_t spp = 1) {
  return {row_stride, spp, s.default_predictor(), ByteOrder::LittleEndian};
}

Bytes smooth_tile_bytes() {
  const Raster r = generate_synthetic_scene(256, 256, 4, 11, 0.8);
  Bytes out(r.byte_size());
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    out[2 * i] = static_cast<std::uint8_t>(r.samples[i]);
    out[2 * i + 1] = static_cast<std::uint8_t>(r.samples[i] >> 8);
  }
  return out;
}

TEST(Codecs, NoneIsIdentity) {
  const Bytes raw = {1, 2, 3, 4, 5, 6, 7, 8};
  const auto s = CompressionScheme::none();
  EXPECT_EQ(encode(s, raw, layout_for(s, 8)), raw);
  EXPECT_EQ(decode(Codec::None, raw, raw.size(), layout_for(s, 8)), raw);
}

TEST(Codecs, AllZeroRoundtripEveryVariant) {
  const Bytes raw(512 * 64, 0);
  for (Variant v : kAllVariants) {
    const auto s = scheme_for(v);
    const auto layout = layout_for(s, 512, 4);
    const Bytes enc = encode(s, raw, layout);
    EXPECT_EQ(decode(s.codec, enc, raw.size(), layout), raw) << variant_name(v);
  }
}

TEST(Codecs, DeflateLevelsOrderedOnSmoothData) {
  const Bytes raw = smooth_tile_bytes();
  const auto size_at = [&](int level) {
    const auto s = CompressionScheme::deflate(level);
    return encode(s, raw, layout_for(s, 256 * 4 * 2, 4)).size();
  };
  const auto d1 = size_at(1), d6 = size_at(6), d9 = size_at(9);
  EXPECT_LE(d9, d6);
  EXPECT_LE(d6, d1);
  EXPECT_LT(d1, raw.size());
}

TEST(Codecs, HorizontalPredictorAlgebra) {
  // One row, one band, four 16-bit samples of 5 (little-endian).
  Bytes row = {5, 0, 5, 0, 5, 0, 5, 0};
  const SampleLayout layout{8, 1, Predictor::Horizontal, ByteOrder::LittleEndian};
  apply_horizontal_predictor(row, layout);
  EXPECT_EQ(row, (Bytes{5, 0, 0, 0, 0, 0, 0, 0}));
  reverse_horizontal_predictor(row, layout);
  EXPECT_EQ(row, (Bytes{5, 0, 5, 0, 5, 0, 5, 0}));
}

TEST(Codecs, PredictorDifferencesPerBandAndWraps) {
  // Two bands, big-endian: band 0 = 1, 3; band 1 = 0xFFFF, 0x0001.
  Bytes row = {0x00, 0x01, 0xFF, 0xFF, 0x00, 0x03, 0x00, 0x01};
  const SampleLayout layout{8, 2, Predictor::Horizontal, ByteOrder::BigEndian};
  apply_horizontal_predictor(row, layout);
  EXPECT_EQ(row, (Bytes{0x00, 0x01, 0xFF, 0xFF, 0x00, 0x02, 0x00, 0x02}));
  reverse_horizontal_predictor(row, layout);
  EXPECT_EQ(row, (Bytes{0x00, 0x01, 0xFF, 0xFF, 0x00, 0x03, 0x00, 0x01}));
}

TEST(Codecs, TruncatedDeflateIsCorrupt) {
  const Bytes raw = smooth_tile_bytes();
  const auto s = CompressionScheme::deflate(6);
  Bytes enc = encode(s, raw, layout_for(s, 2048, 4));
  enc.resize(enc.size() / 2);
  EXPECT_COG_ERROR(decode(Codec::Deflate, enc, raw.size(), layout_for(s, 2048, 4)),
                   ErrorCode::Corrupt);
}

TEST(Codecs, GarbageIsCorruptForEveryEntropyCoder) {
  const Bytes garbage(100, 0xAB);
  const SampleLayout layout{100, 1, Predictor::None, ByteOrder::LittleEndian};
  for (Codec c : {Codec::Deflate, Codec::Zstd, Codec::Lzw}) {
    try {
      decode(c, garbage, 1000, layout);
      ADD_FAILURE() << codec_name(c) << " accepted garbage";
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::Corrupt || e.code() == ErrorCode::LengthMismatch)
          << codec_name(c) << ": " << e.what();
    }
  }
}

TEST(Codecs, WrongExpectedLengthIsLengthMismatch) {
  const Bytes raw(4096, 7);
  for (Variant v : kAllVariants) {
    const auto s = scheme_for(v);
    const auto layout = layout_for(s, 64, 1);
    const Bytes enc = encode(s, raw, layout);
    EXPECT_COG_ERROR(decode(s.codec, enc, raw.size() + 64, layout), ErrorCode::LengthMismatch);
    EXPECT_COG_ERROR(decode(s.codec, enc, raw.size() - 64, layout), ErrorCode::LengthMismatch);
  }
}

TEST(Codecs, InvalidSchemesRejected) {
  const Bytes raw(16, 0);
  const SampleLayout layout{16, 1, Predictor::None, ByteOrder::LittleEndian};
  EXPECT_COG_ERROR(encode(CompressionScheme{Codec::Deflate, 0}, raw, layout),
                   ErrorCode::UnsupportedScheme);
  EXPECT_COG_ERROR(encode(CompressionScheme{Codec::Deflate, std::nullopt}, raw, layout),
                   ErrorCode::UnsupportedScheme);
  EXPECT_COG_ERROR(encode(CompressionScheme{Codec::Lzw, 3}, raw, layout),
                   ErrorCode::UnsupportedScheme);
  const SampleLayout predicted{16, 1, Predictor::Horizontal, ByteOrder::LittleEndian};
  EXPECT_COG_ERROR(encode(CompressionScheme::none(), raw, predicted), ErrorCode::UnsupportedScheme);
}

TEST(Codecs, EncodeIsDeterministic) {
  const Bytes raw = smooth_tile_bytes();
  for (Variant v : kAllVariants) {
    const auto s = scheme_for(v);
    const auto layout = layout_for(s, 2048, 4);
    EXPECT_EQ(encode(s, raw, layout), encode(s, raw, layout)) << variant_name(v);
  }
}

TEST(Codecs, DecodeStatsReported) {
  const Bytes raw = smooth_tile_bytes();
  const auto s = CompressionScheme::zstd();
  const auto layout = layout_for(s, 2048, 4);
  const Bytes enc = encode(s, raw, layout);
  DecodeStats stats;
  decode(Codec::Zstd, enc, raw.size(), layout, &stats);
  EXPECT_EQ(stats.bytes_in, enc.size());
  EXPECT_EQ(stats.bytes_out, raw.size());
  EXPECT_GT(stats.elapsed.count(), 0);
}

TEST(Codecs, VariantNamesRoundtrip) {
  for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_EQ(parse_variant("ZSTD"), Variant::Zstd);
  EXPECT_FALSE(parse_variant("lerc").has_value());
  EXPECT_EQ(scheme_for(Variant::Deflate9), CompressionScheme::deflate(9));
}

// Property test: decode(encode(x)) == x for random buffers of random shapes.
TEST(Codecs, FuzzRoundtripThousandBuffersPerScheme) {
  std::mt19937_64 rng(20260101);
  for (Variant v : kAllVariants) {
    const auto s = scheme_for(v);
    for (int i = 0; i < 1000; ++i) {
      const std::uint16_t spp = static_cast<std::uint16_t>(1 + rng() % 4);
      const std::size_t pixels_per_row = 1 + rng() % 64;
      const std::size_t rows = 1 + rng() % 16;
      const std::size_t stride = pixels_per_row * spp * 2;
      Bytes raw(stride * rows);
      // Mix of entropy regimes: full noise, small alphabet, and runs.
      const int regime = static_cast<int>(rng() % 3);
      for (std::size_t k = 0; k < raw.size(); ++k) {
        if (regime == 0) raw[k] = static_cast<std::uint8_t>(rng());
        else if (regime == 1) raw[k] = static_cast<std::uint8_t>(rng() % 4);
        else raw[k] = static_cast<std::uint8_t>((k / 37) & 0xFF);
      }
      SampleLayout layout = layout_for(s, stride, spp);
      layout.byte_order = (rng() & 1) ? ByteOrder::BigEndian : ByteOrder::LittleEndian;
      const Bytes enc = encode(s, raw, layout);
      ASSERT_EQ(decode(s.codec, enc, raw.size(), layout), raw)
          << variant_name(v) << " buffer " << i << " size " << raw.size();
    }
  }
}

TEST(Lzw, LongIncompressibleInputForcesDictionaryResets) {
  std::mt19937 rng(3);
  Bytes raw(300000);
  for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
  const Bytes enc = lzw::encode(raw);
  EXPECT_EQ(lzw::decode(enc, raw.size()), raw);
}

TEST(Lzw, HighlyRepetitiveInput) {
  const Bytes raw(1 << 20, 'a');
  const Bytes enc = lzw::encode(raw);
  EXPECT_LT(enc.size(), raw.size() / 50);
  EXPECT_EQ(lzw::decode(enc, raw.size()), raw);
}

TEST(Lzw, EmptyInputEncodesOnlyEoi) {
  // As libtiff does: no Clear without data, then EOI (257) in 9 bits MSB-first.
  const Bytes enc = lzw::encode({});
  ASSERT_EQ(enc.size(), 2u);
  EXPECT_EQ(enc[0], 0x80);
  EXPECT_EQ(enc[1], 0x80);
  EXPECT_TRUE(lzw::decode(enc, 0).empty());
}

TEST(Lzw, TruncatedStreamIsCorrupt) {
  Bytes raw(5000);
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<std::uint8_t>(i * 7 % 251);
  Bytes enc = lzw::encode(raw);
  enc.resize(enc.size() / 3);
  EXPECT_COG_ERROR(lzw::decode(enc, raw.size()), ErrorCode::Corrupt);
}

}  // namespace
}  // namespace cogstream

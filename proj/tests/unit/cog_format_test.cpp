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

#include <cstring>

#include "cogstream/cog.hpp"
#include "test_support.hpp"

namespace cogstream {
namespace {

using testing::TempDir;

struct Written {
  TempDir dir;
  std::filesystem::path path;
};

std::unique_ptr<ByteSource> source_for(const TempDir& dir, const Bytes& bytes,
                                       const std::string& name = "f.tif") {
  testing::write_file(dir / name, bytes);
  return open_local(dir / name);
}

Raster reference_from_fixture() {
  const Bytes raw = testing::read_file(testing::fixture("libtiff/reference.raw"));
  std::uint32_t dims[3];
  std::memcpy(dims, raw.data(), 12);
  Raster r(dims[0], dims[1], static_cast<std::uint16_t>(dims[2]));
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    r.samples[i] = static_cast<std::uint16_t>(raw[12 + 2 * i] | raw[13 + 2 * i] << 8);
  }
  return r;
}

TEST(CogFormat, DescriptorOfDeflateSceneAndZstdTwin) {
  TempDir dir;
  const Raster scene = generate_synthetic_scene(2048, 2048, 4, 1, 0.8);
  auto deflate = source_for(dir, write_cog(scene, CompressionScheme::deflate(6)), "d.tif");
  auto zstd = source_for(dir, write_cog(scene, CompressionScheme::zstd()), "z.tif");
  const CogDescriptor d = parse_cog(*deflate);
  EXPECT_EQ(d.tile_index.tiles_x, 4u);
  EXPECT_EQ(d.tile_index.tiles_y, 4u);
  EXPECT_EQ(d.bands, 4);
  EXPECT_EQ(d.compression, Codec::Deflate);
  EXPECT_EQ(d.format_variant, TiffVariant::Classic);
  EXPECT_EQ(d.byte_order, ByteOrder::LittleEndian);

  CogDescriptor z = parse_cog(*zstd);
  EXPECT_EQ(z.compression, Codec::Zstd);
  z.compression = d.compression;
  z.tile_index = d.tile_index;  // offsets differ with payload sizes
  EXPECT_EQ(z, d);
}

TEST(CogFormat, UncompressedPayloadArithmetic) {
  const Raster scene = generate_synthetic_scene(2048, 2048, 4, 1, 0.8);
  const Bytes file = write_cog(scene, CompressionScheme::none());
  TempDir dir;
  auto src = source_for(dir, file);
  const CogDescriptor d = parse_cog(*src);
  EXPECT_EQ(d.payload_bytes(), 33554432u);
  EXPECT_LT(file.size() - d.payload_bytes(), 4096u);
}

TEST(CogFormat, StripedFileRejected) {
  auto src = open_local(testing::fixture("libtiff/libtiff_striped.tif"));
  EXPECT_COG_ERROR(parse_cog(*src), ErrorCode::StripedNotTiled);
}

TEST(CogFormat, NotTiffAndTruncated) {
  TempDir dir;
  auto junk = source_for(dir, Bytes(64, 'x'), "junk");
  EXPECT_COG_ERROR(parse_cog(*junk), ErrorCode::NotTiff);
  Bytes bad_magic = {'I', 'I', 41, 0, 8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  auto bm = source_for(dir, bad_magic, "bm");
  EXPECT_COG_ERROR(parse_cog(*bm), ErrorCode::NotTiff);

  const Bytes full = write_cog(generate_synthetic_scene(64, 64, 1, 2, 0.5), CompressionScheme::none(),
                               {.tile_size = 32});
  auto tiny = source_for(dir, Bytes(full.begin(), full.begin() + 4), "tiny");
  EXPECT_COG_ERROR(parse_cog(*tiny), ErrorCode::TruncatedHeader);
  auto cut = source_for(dir, Bytes(full.begin(), full.begin() + 40), "cut");
  EXPECT_COG_ERROR(parse_cog(*cut), ErrorCode::TruncatedHeader);
}

// Rewrites the inline SHORT value of `tag` in a little-endian classic file.
void patch_classic_tag(Bytes& file, std::uint16_t tag, std::uint16_t value) {
  const std::uint32_t ifd = file[4] | file[5] << 8 | file[6] << 16 | file[7] << 24;
  const std::uint16_t n = static_cast<std::uint16_t>(file[ifd] | file[ifd + 1] << 8);
  for (std::uint16_t i = 0; i < n; ++i) {
    const std::size_t e = ifd + 2 + i * 12u;
    if ((file[e] | file[e + 1] << 8) == tag) {
      file[e + 8] = static_cast<std::uint8_t>(value);
      file[e + 9] = static_cast<std::uint8_t>(value >> 8);
      return;
    }
  }
  FAIL() << "tag " << tag << " not found";
}

TEST(CogFormat, UnsupportedCodecAndLayout) {
  TempDir dir;
  const Raster r = generate_synthetic_scene(64, 64, 1, 2, 0.5);
  Bytes jpeg = write_cog(r, CompressionScheme::none(), {.tile_size = 32});
  patch_classic_tag(jpeg, tiff_tag::kCompression, 7);
  auto a = source_for(dir, jpeg, "a");
  EXPECT_COG_ERROR(parse_cog(*a), ErrorCode::UnsupportedCodec);

  Bytes eight_bit = write_cog(r, CompressionScheme::none(), {.tile_size = 32});
  patch_classic_tag(eight_bit, tiff_tag::kBitsPerSample, 8);
  auto b = source_for(dir, eight_bit, "b");
  EXPECT_COG_ERROR(parse_cog(*b), ErrorCode::UnsupportedLayout);

  Bytes planar = write_cog(r, CompressionScheme::none(), {.tile_size = 32});
  patch_classic_tag(planar, tiff_tag::kPlanarConfiguration, 2);
  auto c = source_for(dir, planar, "c");
  EXPECT_COG_ERROR(parse_cog(*c), ErrorCode::UnsupportedLayout);

  Bytes float_predictor = write_cog(r, CompressionScheme::lzw(), {.tile_size = 32});
  patch_classic_tag(float_predictor, tiff_tag::kPredictor, 3);
  auto d = source_for(dir, float_predictor, "d");
  EXPECT_COG_ERROR(parse_cog(*d), ErrorCode::UnsupportedLayout);
}

TEST(CogFormat, TileByteExtentIsRowMajor) {
  TempDir dir;
  const Raster r = generate_synthetic_scene(2048, 2048, 1, 3, 0.9);
  auto src = source_for(dir, write_cog(r, CompressionScheme::deflate(1)));
  const CogDescriptor d = parse_cog(*src);
  EXPECT_EQ(tile_byte_extent(d, 0, 0), d.tile_index.entries[0]);
  EXPECT_EQ(tile_byte_extent(d, 3, 3), d.tile_index.entries[15]);
  EXPECT_EQ(tile_byte_extent(d, 1, 2), d.tile_index.entries[9]);
  EXPECT_COG_ERROR(tile_byte_extent(d, 4, 0), ErrorCode::TileOutOfRange);
  EXPECT_COG_ERROR(tile_byte_extent(d, 0, 4), ErrorCode::TileOutOfRange);
}

TEST(CogFormat, TilesLaidOutRowMajorAfterIfd) {
  TempDir dir;
  const Raster r = generate_synthetic_scene(300, 200, 2, 3, 0.5);
  auto src = source_for(dir, write_cog(r, CompressionScheme::lzw(), {.tile_size = 64}));
  const CogDescriptor d = parse_cog(*src);
  for (std::size_t i = 1; i < d.tile_index.entries.size(); ++i) {
    const auto& prev = d.tile_index.entries[i - 1];
    EXPECT_EQ(prev.offset + prev.byte_count, d.tile_index.entries[i].offset);
  }
}

TEST(CogFormat, ConstantUncompressedTileDecodes) {
  Raster r(512, 512, 4);
  std::fill(r.samples.begin(), r.samples.end(), 7);
  TempDir dir;
  auto src = source_for(dir, write_cog(r, CompressionScheme::none()));
  const CogDescriptor d = parse_cog(*src);
  const auto e = tile_byte_extent(d, 0, 0);
  const TilePixels t = decode_tile(d, src->get_range(e.offset, e.byte_count));
  EXPECT_EQ(t.width, 512u);
  EXPECT_EQ(t.height, 512u);
  EXPECT_EQ(t.bands, 4);
  EXPECT_TRUE(std::all_of(t.samples.begin(), t.samples.end(), [](auto v) { return v == 7; }));
}

TEST(CogFormat, LzwPredictorConstantRow) {
  Raster r(64, 64, 1);
  for (std::uint32_t x = 0; x < 64; ++x) r.at(x, 5, 0) = 1234;
  TempDir dir;
  auto src = source_for(dir, write_cog(r, CompressionScheme::lzw(), {.tile_size = 64}));
  const CogDescriptor d = parse_cog(*src);
  EXPECT_EQ(d.predictor, Predictor::Horizontal);
  const auto e = tile_byte_extent(d, 0, 0);
  const TilePixels t = decode_tile(d, src->get_range(e.offset, e.byte_count));
  for (std::uint32_t x = 0; x < 64; ++x) EXPECT_EQ(t.at(x, 5, 0), 1234);
}

TEST(CogFormat, DecodeTileErrors) {
  TempDir dir;
  const Raster r = generate_synthetic_scene(64, 64, 2, 4, 0.5);
  auto src = source_for(dir, write_cog(r, CompressionScheme::deflate(6), {.tile_size = 32}));
  const CogDescriptor d = parse_cog(*src);
  EXPECT_COG_ERROR(decode_tile(d, Bytes(50, 0x11)), ErrorCode::CorruptTile);

  const Raster bigger = generate_synthetic_scene(64, 64, 2, 4, 0.5);
  const Bytes other = write_cog(bigger, CompressionScheme::deflate(6), {.tile_size = 64});
  auto osrc = source_for(dir, other, "o.tif");
  const CogDescriptor od = parse_cog(*osrc);
  const auto e = tile_byte_extent(od, 0, 0);
  EXPECT_COG_ERROR(decode_tile(d, osrc->get_range(e.offset, e.byte_count)),
                   ErrorCode::SizeMismatch);
}

TEST(CogFormat, RoundtripAllVariantsWithEdgeTiles) {
  const Raster r = generate_synthetic_scene(333, 217, 3, 9, 0.7);
  TempDir dir;
  for (Variant v : kAllVariants) {
    auto src = source_for(dir, write_cog(r, scheme_for(v), {.tile_size = 128}),
                          std::string(variant_name(v)) + ".tif");
    const CogDescriptor d = parse_cog(*src);
    EXPECT_EQ(d.tile_index.tiles_x, 3u);
    EXPECT_EQ(d.tile_index.tiles_y, 2u);
    EXPECT_EQ(read_raster(*src), r) << variant_name(v);
  }
}

TEST(CogFormat, EdgeTilesPaddedWithZero) {
  Raster r(40, 40, 1);
  std::fill(r.samples.begin(), r.samples.end(), 9);
  TempDir dir;
  auto src = source_for(dir, write_cog(r, CompressionScheme::none(), {.tile_size = 32}));
  const CogDescriptor d = parse_cog(*src);
  const auto e = tile_byte_extent(d, 1, 1);
  EXPECT_EQ(e.byte_count, 32u * 32u * 2u);
  const TilePixels t = decode_tile(d, src->get_range(e.offset, e.byte_count));
  EXPECT_EQ(t.at(7, 7, 0), 9);
  EXPECT_EQ(t.at(8, 7, 0), 0);
  EXPECT_EQ(t.at(7, 8, 0), 0);
}

TEST(CogFormat, BigEndianAndBigTiffRoundtrip) {
  const Raster r = generate_synthetic_scene(100, 90, 2, 5, 0.6);
  TempDir dir;
  int i = 0;
  for (ByteOrder order : {ByteOrder::LittleEndian, ByteOrder::BigEndian}) {
    for (TiffVariant variant : {TiffVariant::Classic, TiffVariant::BigTiff}) {
      for (Variant v : kAllVariants) {
        WriteOptions opts{.tile_size = 48, .byte_order = order, .variant = variant};
        auto src = source_for(dir, write_cog(r, scheme_for(v), opts), std::to_string(i++));
        const CogDescriptor d = parse_cog(*src);
        EXPECT_EQ(d.byte_order, order);
        EXPECT_EQ(d.format_variant, variant);
        EXPECT_EQ(read_raster(*src), r);
      }
    }
  }
}

TEST(CogFormat, RejectsBadWriteInputs) {
  const Raster r = generate_synthetic_scene(64, 64, 1, 1, 0.5);
  EXPECT_COG_ERROR(write_cog(r, CompressionScheme{Codec::Zstd, 99}), ErrorCode::UnsupportedScheme);
  EXPECT_COG_ERROR(write_cog(r, CompressionScheme::none(), {.tile_size = 30}),
                   ErrorCode::InvalidArgument);
}

TEST(CogFormat, CompressionOrderingOnSmoothScene) {
  const Raster r = generate_synthetic_scene(1024, 1024, 4, 1, 0.8);
  TempDir dir;
  const auto payload = [&](const CompressionScheme& s) {
    auto src = source_for(dir, write_cog(r, s), "p.tif");
    return parse_cog(*src).payload_bytes();
  };
  const auto none = payload(CompressionScheme::none());
  const auto d1 = payload(CompressionScheme::deflate(1));
  const auto d6 = payload(CompressionScheme::deflate(6));
  const auto d9 = payload(CompressionScheme::deflate(9));
  EXPECT_LE(d9, d6);
  EXPECT_LE(d6, d1);
  EXPECT_LE(d1, none);
}

TEST(CogFormat, SyntheticSceneDeterminismAndCompressibility) {
  EXPECT_EQ(generate_synthetic_scene(2048, 2048, 4, 1, 0.8),
            generate_synthetic_scene(2048, 2048, 4, 1, 0.8));
  EXPECT_NE(generate_synthetic_scene(64, 64, 4, 1, 0.8), generate_synthetic_scene(64, 64, 4, 2, 0.8));

  TempDir dir;
  const auto ratio = [&](double smoothness) {
    const Raster r = generate_synthetic_scene(512, 512, 4, 1, smoothness);
    auto src = source_for(dir, write_cog(r, CompressionScheme::deflate(6)), "r.tif");
    return static_cast<double>(parse_cog(*src).payload_bytes()) / static_cast<double>(r.byte_size());
  };
  EXPECT_LT(ratio(1.0), 0.05);
  EXPECT_GE(ratio(0.0), 0.9);
  const double mid = ratio(0.8);
  EXPECT_GT(mid, 0.05);
  EXPECT_LT(mid, 0.9);
}

TEST(CogFormat, ParseReadsOnlyBoundedMetadata) {
  TempDir dir;
  const Raster r = generate_synthetic_scene(2048, 2048, 4, 1, 0.8);
  auto src = source_for(dir, write_cog(r, CompressionScheme::zstd(), {.tile_size = 128}));
  parse_cog(*src);
  std::uint64_t touched = 0;
  for (const auto& rec : src->log().snapshot()) touched += rec.length;
  EXPECT_LT(touched, 64u * 1024u);
  EXPECT_LE(src->log().size(), 4u);
}

TEST(CogFormat, TranscodeSixVariantsPixelIdentical) {
  TempDir dir;
  const Raster r = generate_synthetic_scene(300, 300, 4, 8, 0.8);
  auto src = source_for(dir, write_cog(r, CompressionScheme::deflate(6), {.tile_size = 128}),
                        "src.tif");
  const auto out_dir = dir / "out";
  std::filesystem::create_directories(out_dir);
  const auto paths = transcode(*src, kAllVariants, out_dir, "scene_000");
  ASSERT_EQ(paths.size(), 6u);
  const CogDescriptor ref = parse_cog(*src);
  for (const auto& p : paths) {
    auto s = open_local(p);
    const CogDescriptor d = parse_cog(*s);
    EXPECT_EQ(d.geometry(), ref.geometry()) << p;
    EXPECT_EQ(read_raster(*s), r) << p;
  }
  EXPECT_TRUE(std::filesystem::exists(out_dir / "scene_000_zstd.tif"));
  EXPECT_TRUE(std::filesystem::exists(out_dir / "scene_000_deflate_9.tif"));

  // A transcode chain leaves pixels untouched.
  auto lzw = open_local(out_dir / "scene_000_lzw.tif");
  const std::array<Variant, 1> zstd_only = {Variant::Zstd};
  const auto again = transcode(*lzw, zstd_only, out_dir, "chain");
  auto chained = open_local(again.at(0));
  EXPECT_EQ(read_raster(*chained), r);
}

TEST(CogFormat, TranscodeEmptySetAndCorruptSource) {
  TempDir dir;
  const Raster r = generate_synthetic_scene(128, 128, 1, 8, 0.8);
  auto src = source_for(dir, write_cog(r, CompressionScheme::none(), {.tile_size = 64}), "s.tif");
  EXPECT_TRUE(transcode(*src, std::span<const Variant>{}, dir.path(), "x").empty());

  Bytes broken = write_cog(r, CompressionScheme::deflate(6), {.tile_size = 64});
  const auto d = [&] {
    auto tmp = source_for(dir, broken, "tmp.tif");
    return parse_cog(*tmp);
  }();
  // Scribble over the last tile's payload so decoding fails late.
  const auto last = d.tile_index.entries.back();
  std::fill_n(broken.begin() + static_cast<std::ptrdiff_t>(last.offset), last.byte_count, 0xFF);
  auto bad = source_for(dir, broken, "bad.tif");
  const auto out_dir = dir / "out";
  std::filesystem::create_directories(out_dir);
  EXPECT_COG_ERROR(transcode(*bad, kAllVariants, out_dir, "bad"), ErrorCode::CorruptTile);
  EXPECT_TRUE(std::filesystem::is_empty(out_dir));
}

// Files written by libtiff (see fixtures/libtiff_interop.py) decode to the
// reference pixels.
class LibtiffFixture : public ::testing::TestWithParam<std::string> {};

TEST_P(LibtiffFixture, DecodesToReference) {
  auto src = open_local(testing::fixture("libtiff/" + GetParam()));
  EXPECT_EQ(read_raster(*src), reference_from_fixture());
}

INSTANTIATE_TEST_SUITE_P(
    Interop, LibtiffFixture,
    ::testing::Values("libtiff_none.tif", "libtiff_lzw_pred2.tif", "libtiff_lzw.tif",
                      "libtiff_deflate.tif", "libtiff_deflate_pred2.tif", "libtiff_zstd.tif",
                      "libtiff_be_lzw_pred2.tif", "libtiff_bigtiff_deflate.tif",
                      "libtiff_bigtiff_be_zstd.tif"),
    [](const auto& info) {
      std::string name = info.param.substr(8, info.param.size() - 12);
      return name;
    });

}  // namespace
}  // namespace cogstream

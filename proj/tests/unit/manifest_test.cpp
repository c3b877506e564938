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

#include "cogstream/manifest.hpp"

#include <gtest/gtest.h>

#include "cogstream/pipeline.hpp"
#include "test_support.hpp"

namespace cogstream {
namespace {

PrepareOptions small(const std::filesystem::path& out, std::uint32_t scenes) {
  PrepareOptions o;
  o.out_dir = out;
  o.scenes = scenes;
  o.width = 300;
  o.height = 260;
  o.tile_size = 128;
  o.seed = 5;
  return o;
}

TEST(Manifest, PrepareWritesEveryVariantOfEveryScene) {
  testing::TempDir dir;
  const auto m = prepare_dataset(small(dir / "ds", 2));
  EXPECT_EQ(m.files.size(), 12u);
  EXPECT_EQ(m.variants.size(), 6u);
  EXPECT_EQ(m.files_for(Variant::Zstd),
            (std::vector<std::string>{"scene_000_zstd.tif", "scene_001_zstd.tif"}));
  EXPECT_EQ(m.files_for(Variant::Deflate1).size(), 2u);
  const auto loaded = DatasetManifest::load(dir / "ds");
  EXPECT_EQ(loaded.files, m.files);
  EXPECT_EQ(loaded.width, 300u);
  EXPECT_EQ(loaded.tile_size, 128u);
  // Every variant decodes to the same pixels.
  const auto none = open_local_dataset(dir / "ds", Variant::None);
  for (Variant v : kAllVariants) {
    const auto ds = open_local_dataset(dir / "ds", v);
    ASSERT_EQ(ds.size(), 2u);
    for (std::size_t s = 0; s < 2; ++s) {
      EXPECT_EQ(read_raster(*ds.open(s)), read_raster(*none.open(s))) << variant_name(v);
    }
  }
}

TEST(Manifest, RerunWithSameSeedIsByteIdentical) {
  testing::TempDir dir;
  prepare_dataset(small(dir / "a", 2));
  prepare_dataset(small(dir / "b", 2));
  for (Variant v : {Variant::None, Variant::Zstd, Variant::Lzw}) {
    EXPECT_EQ(testing::read_file(dir / "a" / scene_file_name(1, v)),
              testing::read_file(dir / "b" / scene_file_name(1, v)));
  }
  EXPECT_EQ(testing::read_file(dir / "a" / "manifest.json"),
            testing::read_file(dir / "b" / "manifest.json"));
}

TEST(Manifest, ZeroScenesGivesEmptyManifest) {
  testing::TempDir dir;
  const auto m = prepare_dataset(small(dir / "empty", 0));
  EXPECT_TRUE(m.files.empty());
  EXPECT_TRUE(DatasetManifest::load(dir / "empty").files.empty());
}

TEST(Manifest, LoadChecksFilesAndNames) {
  testing::TempDir dir;
  prepare_dataset(small(dir / "ds", 1));
  std::filesystem::remove(dir / "ds" / "scene_000_lzw.tif");
  EXPECT_COG_ERROR(DatasetManifest::load(dir / "ds"), ErrorCode::NotFound);
  EXPECT_COG_ERROR(DatasetManifest::load(dir / "nowhere"), ErrorCode::Io);
  EXPECT_COG_ERROR(DatasetManifest::parse("{"), ErrorCode::InvalidArgument);
  DatasetManifest m;
  m.files = {"../etc/passwd"};
  EXPECT_COG_ERROR(DatasetManifest::parse(m.to_json()), ErrorCode::InvalidArgument);
}

}  // namespace
}  // namespace cogstream

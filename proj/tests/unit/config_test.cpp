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

#include "cogstream/config.hpp"

#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

namespace cogstream {
namespace {

TEST(LoaderConfig, DefaultsAreValid) {
  LoaderConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.batch_size, 32u);
  EXPECT_EQ(c.epochs, 5u);
  EXPECT_EQ(c.patches_per_epoch, 1024u);
}

TEST(LoaderConfig, OutOfDomainNamesKeyAndDomain) {
  LoaderConfig c;
  c.patch_size = 300;
  try {
    c.validate();
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("patch_size"), std::string::npos) << msg;
    EXPECT_NE(msg.find("{128,256,512,1024}"), std::string::npos) << msg;
  }
  c = {};
  c.num_workers = 3;
  EXPECT_COG_ERROR(c.validate(), ErrorCode::InvalidConfig);
  c = {};
  c.num_threads = 64;
  EXPECT_COG_ERROR(c.validate(), ErrorCode::InvalidConfig);
  c = {};
  c.prefetch_factor = 0;
  EXPECT_COG_ERROR(c.validate(), ErrorCode::InvalidConfig);
  c = {};
  c.epochs = 0;
  EXPECT_COG_ERROR(c.validate(), ErrorCode::InvalidConfig);
  c = {};
  c.batch_size = 0;
  EXPECT_COG_ERROR(c.validate(), ErrorCode::InvalidConfig);
}

TEST(LoaderConfig, ParseTextWithCommentsAndBooleans) {
  const auto c = LoaderConfig::parse(
      "# remote optimum\n"
      "compression = zstd\n"
      "patch_size = 1024   # one tile\n"
      "num_workers = 64\n"
      "\n"
      "blocked = True\n"
      "prefetch_factor=8\n");
  EXPECT_EQ(c.compression, Variant::Zstd);
  EXPECT_EQ(c.patch_size, 1024u);
  EXPECT_EQ(c.num_workers, 64u);
  EXPECT_EQ(c.num_threads, 1u);
  EXPECT_TRUE(c.blocked);
  EXPECT_EQ(c.prefetch_factor, 8u);
  EXPECT_EQ(c, remote_optimized_config());
}

TEST(LoaderConfig, ParseErrors) {
  EXPECT_COG_ERROR(LoaderConfig::parse("cache = true\n"), ErrorCode::InvalidConfig);
  EXPECT_COG_ERROR(LoaderConfig::parse("num_workers = 4\nnum_workers = 8\n"),
                   ErrorCode::InvalidConfig);
  EXPECT_COG_ERROR(LoaderConfig::parse("num_workers 4\n"), ErrorCode::InvalidConfig);
  EXPECT_COG_ERROR(LoaderConfig::parse("num_workers = four\n"), ErrorCode::InvalidConfig);
  EXPECT_COG_ERROR(LoaderConfig::parse("num_workers = -4\n"), ErrorCode::InvalidConfig);
  EXPECT_COG_ERROR(LoaderConfig::parse("blocked = yes\n"), ErrorCode::InvalidConfig);
  EXPECT_COG_ERROR(LoaderConfig::parse("compression = jpeg\n"), ErrorCode::InvalidConfig);
  EXPECT_COG_ERROR(LoaderConfig::parse("patch_size = 300\n"), ErrorCode::InvalidConfig);
}

TEST(LoaderConfig, ParseOnTopOfABase) {
  LoaderConfig base;
  base.patches_per_epoch = 256;
  const auto c = LoaderConfig::parse("num_workers = 8\n", base);
  EXPECT_EQ(c.patches_per_epoch, 256u);
  EXPECT_EQ(c.num_workers, 8u);
  EXPECT_EQ(LoaderConfig::parse("patches_per_epoch = 64\n", base).patches_per_epoch, 64u);
}

TEST(LoaderConfig, TextRoundTrip) {
  LoaderConfig c;
  c.compression = Variant::Lzw;
  c.patch_size = 128;
  c.num_workers = 16;
  c.num_threads = 8;
  c.blocked = true;
  c.prefetch_factor = 16;
  c.batch_size = 7;
  c.epochs = 2;
  c.patches_per_epoch = 99;
  EXPECT_EQ(LoaderConfig::parse(c.to_text()), c);
}

TEST(LoaderConfig, LoadFromFile) {
  testing::TempDir dir;
  const std::string text = "compression = deflate_6\npatch_size = 256\n";
  testing::write_file(dir / "c.cfg", Bytes(text.begin(), text.end()));
  EXPECT_EQ(LoaderConfig::load((dir / "c.cfg").string()), baseline_config());
  EXPECT_COG_ERROR(LoaderConfig::load((dir / "missing.cfg").string()), ErrorCode::Io);
}

TEST(LoaderConfig, HashIsStableAndDistinguishesFields) {
  const LoaderConfig a;
  EXPECT_EQ(a.hash(), LoaderConfig{}.hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
  // FNV-1a 64 of the empty string is the offset basis; check the arithmetic
  // independently on the canonical text.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : a.canonical()) h = (h ^ ch) * 0x100000001b3ull;
  EXPECT_EQ(a.hash(), h);

  std::set<std::uint64_t> hashes;
  for (auto p : domain::kPatchSizes) {
    for (auto w : domain::kWorkers) {
      for (bool blocked : {false, true}) {
        LoaderConfig c;
        c.patch_size = p;
        c.num_workers = w;
        c.blocked = blocked;
        hashes.insert(c.hash());
      }
    }
  }
  EXPECT_EQ(hashes.size(), domain::kPatchSizes.size() * domain::kWorkers.size() * 2);
}

TEST(LoaderConfig, HeadlineConfigs) {
  const auto base = baseline_config();
  EXPECT_EQ(base.compression, Variant::Deflate6);
  EXPECT_EQ(base.patch_size, 256u);
  EXPECT_FALSE(base.blocked);
  EXPECT_EQ(base.num_workers, 4u);
  EXPECT_EQ(base.num_threads, 1u);
  const auto opt = remote_optimized_config();
  EXPECT_EQ(opt.compression, Variant::Zstd);
  EXPECT_EQ(opt.patch_size, 1024u);
  EXPECT_TRUE(opt.blocked);
  EXPECT_EQ(opt.num_workers, 64u);
  EXPECT_EQ(opt.num_threads, 1u);
  EXPECT_EQ(opt.prefetch_factor, 8u);
}

}  // namespace
}  // namespace cogstream

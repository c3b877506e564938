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

#include "cogstream/pipeline.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <json.hpp>
#include <sstream>

#include "test_support.hpp"

namespace cogstream {
namespace {

constexpr std::uint32_t kSize = 1024;
constexpr std::uint32_t kTile = 256;
constexpr std::uint16_t kBands = 4;

Raster crop(const Raster& r, const WindowSpec& w) {
  Raster out(w.width, w.height, r.bands);
  for (std::uint32_t y = 0; y < w.height; ++y)
    for (std::uint32_t x = 0; x < w.width; ++x)
      for (std::uint16_t b = 0; b < r.bands; ++b)
        out.at(x, y, b) = r.at(w.col_off + x, w.row_off + y, b);
  return out;
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    scenes_ = new std::vector<Raster>();
    for (int s = 0; s < 2; ++s) {
      scenes_->push_back(generate_synthetic_scene(kSize, kSize, kBands, 100 + s, 0.6));
      char stem[32];
      std::snprintf(stem, sizeof stem, "scene_%03d", s);
      for (Variant v : {Variant::None, Variant::Zstd, Variant::Deflate6}) {
        const Bytes file = write_cog(scenes_->back(), scheme_for(v), {kTile});
        write_file_atomic(dir_->path() / (std::string(stem) + "_" +
                                          std::string(variant_name(v)) + ".tif"),
                          file);
      }
    }
  }
  static void TearDownTestSuite() {
    delete scenes_;
    delete dir_;
  }

  static LoaderConfig small_config() {
    LoaderConfig c;
    c.compression = Variant::Zstd;
    c.patch_size = 256;
    c.num_workers = 2;
    c.num_threads = 2;
    c.batch_size = 4;
    c.epochs = 1;
    c.patches_per_epoch = 24;
    return c;
  }

  static testing::TempDir* dir_;
  static std::vector<Raster>* scenes_;
};

testing::TempDir* PipelineTest::dir_ = nullptr;
std::vector<Raster>* PipelineTest::scenes_ = nullptr;

TileMap decode_cover(ByteSource& src, const CogDescriptor& desc, const WindowSpec& w) {
  TileMap tiles;
  for (const auto& tc : tiles_for_window(desc, w)) {
    const auto e = tile_byte_extent(desc, tc.tx, tc.ty);
    tiles.emplace(tc, decode_tile(desc, src.get_range(e.offset, e.byte_count)));
  }
  return tiles;
}

TEST_F(PipelineTest, AssembleAlignedTileIsTheTile) {
  auto src = open_local(dir_->path() / "scene_000_zstd.tif");
  const auto desc = parse_cog(*src);
  const WindowSpec w{256, 512, 256, 256};
  const auto tiles = decode_cover(*src, desc, w);
  ASSERT_EQ(tiles.size(), 1u);
  const Patch p = assemble_patch(desc, w, tiles);
  EXPECT_EQ(p.pixels, tiles.begin()->second);
}

TEST_F(PipelineTest, AssembleAcrossSeamsMatchesReferenceAndSource) {
  auto src = open_local(dir_->path() / "scene_001_deflate_6.tif");
  const auto desc = parse_cog(*src);
  for (const WindowSpec w : {WindowSpec{200, 130, 256, 256}, WindowSpec{255, 255, 2, 2},
                             WindowSpec{0, 700, 1024, 300}, WindowSpec{768, 768, 256, 256}}) {
    const auto tiles = decode_cover(*src, desc, w);
    const Patch p = assemble_patch(desc, w, tiles);
    EXPECT_EQ(p.pixels, ReferenceReader(*src, desc).read(w));
    EXPECT_EQ(p.pixels, crop((*scenes_)[1], w));
  }
}

TEST_F(PipelineTest, AssembleMissingTile) {
  auto src = open_local(dir_->path() / "scene_000_none.tif");
  const auto desc = parse_cog(*src);
  const WindowSpec w{200, 200, 128, 128};
  auto tiles = decode_cover(*src, desc, w);
  ASSERT_EQ(tiles.size(), 4u);
  tiles.erase(TileCoord{1, 1});
  EXPECT_COG_ERROR(assemble_patch(desc, w, tiles), ErrorCode::MissingTile);
}

TEST_F(PipelineTest, ReferenceReaderUsesOneRequest) {
  auto src = open_local(dir_->path() / "scene_000_none.tif");
  const auto desc = parse_cog(*src);
  const std::size_t before = src->log().size();
  ReferenceReader(*src, desc).read(WindowSpec{100, 100, 300, 300});
  EXPECT_EQ(src->log().size(), before + 1);
}

TEST(Throughput, ArithmeticUsesDecimalMegabytes) {
  const std::uint64_t bytes = 1024ull * 256 * 256 * 4 * 2;
  EXPECT_NEAR(throughput_mbps(bytes, 10.0), 53.6870912, 1e-9);
  EXPECT_EQ(throughput_mbps(bytes, 0.0), 0.0);
}

TEST(MeanStd, PopulationStandardDeviation) {
  const auto [m, s] = mean_std({2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_DOUBLE_EQ(m, 5.0);
  EXPECT_DOUBLE_EQ(s, 2.0);
  EXPECT_EQ(mean_std({}), std::make_pair(0.0, 0.0));
}

TEST(EpochSeed, DistinctPerEpochAndTrial) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t t = 0; t < 20; ++t)
    for (std::uint32_t e = 0; e < 20; ++e) seeds.insert(epoch_seed(t, e));
  EXPECT_EQ(seeds.size(), 400u);
}

TEST_F(PipelineTest, DatasetListsVariantAndChecksGeometry) {
  const auto ds = open_local_dataset(dir_->path(), Variant::Zstd);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.name(0), "scene_000_zstd.tif");
  EXPECT_EQ(ds.geometry(), (RasterGeometry{kSize, kSize, kTile, kTile}));
  EXPECT_EQ(ds.bands(), kBands);
  EXPECT_EQ(ds.descriptor(1).compression, Codec::Zstd);

  testing::TempDir other;
  write_file_atomic(other / "a_lzw.tif",
                    write_cog(generate_synthetic_scene(512, 512, 1, 1, 0.5), scheme_for(Variant::Lzw), {256}));
  write_file_atomic(other / "b_lzw.tif",
                    write_cog(generate_synthetic_scene(512, 256, 1, 1, 0.5), scheme_for(Variant::Lzw), {256}));
  EXPECT_COG_ERROR(open_local_dataset(other.path(), Variant::Lzw), ErrorCode::InvalidArgument);
  EXPECT_COG_ERROR(open_local_dataset(other.path(), Variant::Zstd), ErrorCode::InvalidArgument);
}

TEST_F(PipelineTest, CatalogOpensEachVariantOnce) {
  int opened = 0;
  DatasetCatalog catalog([&](Variant v) {
    ++opened;
    return open_local_dataset(dir_->path(), v);
  });
  EXPECT_EQ(catalog.get(Variant::Zstd).variant(), Variant::Zstd);
  EXPECT_EQ(catalog.get(Variant::None).variant(), Variant::None);
  EXPECT_EQ(&catalog.get(Variant::Zstd), &catalog.get(Variant::Zstd));
  EXPECT_EQ(opened, 2);
}

TEST_F(PipelineTest, PlanIgnoresConcurrencySettings) {
  const auto ds = open_local_dataset(dir_->path(), Variant::Zstd);
  auto a = small_config();
  auto b = a;
  b.num_workers = 16;
  b.num_threads = 32;
  b.prefetch_factor = 16;
  b.batch_size = 5;
  const auto pa = plan_epoch(ds, a, 7);
  const auto pb = plan_epoch(ds, b, 7);
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].window, pb[i].window);
    EXPECT_EQ(pa[i].scene, pb[i].scene);
  }
  std::set<std::uint32_t> scenes;
  for (const auto& p : pa) scenes.insert(p.scene);
  EXPECT_EQ(scenes.size(), 2u);
}

TEST_F(PipelineTest, DeliversBitExactPatchesAndExactAccounting) {
  const auto ds = open_local_dataset(dir_->path(), Variant::Deflate6);
  auto cfg = small_config();
  cfg.patches_per_epoch = 22;  // last batch short
  std::vector<Patch> delivered;
  std::vector<std::size_t> batch_sizes;
  EngineOptions opts;
  opts.verify_every = 1;
  opts.on_batch = [&](const std::vector<Patch>& batch) {
    batch_sizes.push_back(batch.size());
    delivered.insert(delivered.end(), batch.begin(), batch.end());
  };
  const auto stats = run_epoch(cfg, ds, 11, opts);
  ASSERT_TRUE(stats.valid) << stats.error;
  EXPECT_EQ(batch_sizes, (std::vector<std::size_t>{4, 4, 4, 4, 4, 2}));
  ASSERT_EQ(delivered.size(), 22u);

  // Independent accounting: plan, cover, extents.
  const auto plan = plan_epoch(ds, cfg, 11);
  std::uint64_t tiles = 0;
  std::uint64_t net = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    EXPECT_EQ(delivered[i].index, i);
    EXPECT_EQ(delivered[i].window, plan[i].window);
    EXPECT_EQ(delivered[i].pixels, crop((*scenes_)[plan[i].scene], plan[i].window));
    const auto& desc = ds.descriptor(plan[i].scene);
    for (const auto& tc : tiles_for_window(desc, plan[i].window)) {
      ++tiles;
      net += tile_byte_extent(desc, tc.tx, tc.ty).byte_count;
    }
  }
  EXPECT_EQ(stats.patches_delivered, 22u);
  EXPECT_EQ(stats.decoded_bytes, 22ull * 256 * 256 * kBands * 2);
  EXPECT_EQ(stats.tiles_fetched, tiles);
  EXPECT_EQ(stats.requests, tiles);
  EXPECT_EQ(stats.network_bytes, net);
  EXPECT_GT(stats.elapsed_s, 0.0);
  EXPECT_DOUBLE_EQ(stats.throughput_mbps, throughput_mbps(stats.decoded_bytes, stats.elapsed_s));
  EXPECT_EQ(stats.seed, 11u);
}

TEST_F(PipelineTest, BlockedPatchEqualToTileFetchesOneTileEach) {
  const auto ds = open_local_dataset(dir_->path(), Variant::None);
  auto cfg = small_config();
  cfg.blocked = true;
  cfg.patches_per_epoch = 64;
  const auto stats = run_epoch(cfg, ds, 3);
  ASSERT_TRUE(stats.valid);
  EXPECT_EQ(stats.tiles_fetched, 64u);
  EXPECT_EQ(stats.network_bytes, 64ull * kTile * kTile * kBands * 2);
}

TEST_F(PipelineTest, PatchLargerThanImageIsRejected) {
  testing::TempDir small;
  write_file_atomic(small / "s_zstd.tif",
                    write_cog(generate_synthetic_scene(200, 200, 1, 1, 0.5), scheme_for(Variant::Zstd), {64}));
  const auto ds = open_local_dataset(small.path(), Variant::Zstd);
  auto cfg = small_config();
  EXPECT_COG_ERROR(run_epoch(cfg, ds, 1), ErrorCode::PatchTooLarge);
  cfg.patch_size = 300;
  EXPECT_COG_ERROR(run_epoch(cfg, ds, 1), ErrorCode::InvalidConfig);
}

TEST_F(PipelineTest, SimulatorAccountingIsDeterministic) {
  SourceProfile profile = SourceProfile::desk();
  profile.per_request_latency_ms = 2.0;
  auto store = SimulatedStore::create(profile);
  const auto ds = open_simulated_dataset(dir_->path(), Variant::Zstd, store);
  auto cfg = small_config();
  cfg.num_workers = 4;
  const auto a = run_epoch(cfg, ds, 5);
  const auto b = run_epoch(cfg, ds, 5);
  ASSERT_TRUE(a.valid && b.valid);
  EXPECT_EQ(a.tiles_fetched, b.tiles_fetched);
  EXPECT_EQ(a.network_bytes, b.network_bytes);
  EXPECT_EQ(a.decoded_bytes, b.decoded_bytes);
  const auto c = run_epoch(cfg, ds, 6);
  EXPECT_NE(a.network_bytes, c.network_bytes);
}

// Checks the three scheduling guarantees on a recorded timeline.
void expect_contract(const LoaderConfig& cfg, const EpochTrace& trace) {
  ASSERT_EQ(trace.patches.size(), cfg.patches_per_epoch);
  // (a) per-worker in-flight requests never exceed num_threads.
  for (std::uint32_t w = 0; w < cfg.num_workers; ++w) {
    std::vector<std::pair<Clock::time_point, int>> edges;
    for (const auto& p : trace.patches) {
      if (p.worker != w) continue;
      for (const auto& r : p.requests) {
        edges.emplace_back(r.requested, +1);
        edges.emplace_back(r.complete_time, -1);
      }
    }
    std::sort(edges.begin(), edges.end());  // ends sort before starts at ties
    int in_flight = 0;
    int peak = 0;
    for (const auto& e : edges) peak = std::max(peak, in_flight += e.second);
    EXPECT_LE(peak, static_cast<int>(cfg.num_threads)) << "worker " << w;
    EXPECT_EQ(in_flight, 0);
  }
  // (b) patch barrier: assembled only after its last tile arrived, and its
  // batch completed after that.
  for (const auto& p : trace.patches) {
    ASSERT_FALSE(p.requests.empty());
    for (const auto& r : p.requests) {
      EXPECT_LE(r.requested, r.complete_time);
      EXPECT_LE(r.complete_time, p.assembled) << "patch " << p.index;
    }
    EXPECT_EQ(p.batch, p.index / cfg.batch_size);
    EXPECT_EQ(p.worker, p.batch % cfg.num_workers);
    EXPECT_LE(p.assembled, trace.batches[p.batch].completed);
  }
  // (c) prefetch bound: when a batch is completed, the worker holds at most
  // prefetch_factor completed-but-unconsumed batches (itself included).
  for (const auto& b : trace.batches) {
    EXPECT_LE(b.started, b.completed);
    EXPECT_LE(b.completed, b.consumed);
    int held = 0;
    for (const auto& o : trace.batches) {
      if (o.worker == b.worker && o.completed <= b.completed && o.consumed > b.completed) ++held;
    }
    EXPECT_LE(held, static_cast<int>(cfg.prefetch_factor)) << "batch " << b.index;
  }
  // Batches are consumed in order.
  for (std::size_t i = 1; i < trace.batches.size(); ++i) {
    EXPECT_LE(trace.batches[i - 1].consumed, trace.batches[i].consumed);
  }
}

TEST_F(PipelineTest, ConcurrencyContractHoldsOnTheTimeline) {
  SourceProfile profile = SourceProfile::desk();
  profile.per_request_latency_ms = 3.0;
  profile.latency_jitter_ms = 3.0;
  auto store = SimulatedStore::create(profile);
  const auto ds = open_simulated_dataset(dir_->path(), Variant::None, store);
  for (auto [w, t, pf] : {std::tuple{1u, 4u, 1u}, std::tuple{4u, 2u, 2u}, std::tuple{2u, 1u, 4u}}) {
    auto cfg = small_config();
    cfg.num_workers = w;
    cfg.num_threads = t;
    cfg.prefetch_factor = pf;
    cfg.patch_size = 128;
    cfg.batch_size = 2;
    cfg.patches_per_epoch = 30;
    EpochTrace trace;
    EngineOptions opts;
    opts.trace = &trace;
    opts.consumer_delay = std::chrono::milliseconds(4);  // let queues fill
    const auto stats = run_epoch(cfg, ds, 21, opts);
    ASSERT_TRUE(stats.valid);
    SCOPED_TRACE(cfg.canonical());
    expect_contract(cfg, trace);
    EXPECT_LE(trace.start, trace.patches.front().requests.front().requested);
  }
}

// Serves metadata, then fails every tile read once armed.
class FailingSource : public ByteSource {
 public:
  FailingSource(std::unique_ptr<ByteSource> inner, std::shared_ptr<std::atomic<bool>> armed)
      : inner_(std::move(inner)), armed_(std::move(armed)) {}
  Bytes get_range(std::uint64_t offset, std::uint64_t length, RequestRecord* rec) override {
    if (*armed_) throw Error(ErrorCode::RetriesExhausted, "503 after 4 attempts");
    return inner_->get_range(offset, length, rec);
  }
  std::optional<std::uint64_t> size() const override { return inner_->size(); }
  std::string describe() const override { return "failing"; }

 private:
  std::unique_ptr<ByteSource> inner_;
  std::shared_ptr<std::atomic<bool>> armed_;
};

TEST_F(PipelineTest, SourceFailureInvalidatesEpochAndTrial) {
  auto armed = std::make_shared<std::atomic<bool>>(false);
  const auto dir = dir_->path();
  Dataset ds(Variant::Zstd, variant_file_names(dir, Variant::Zstd),
             [dir, armed](const std::string& name) -> std::unique_ptr<ByteSource> {
               return std::make_unique<FailingSource>(open_local(dir / name), armed);
             });
  *armed = true;
  auto cfg = small_config();
  cfg.num_workers = 4;
  const auto stats = run_epoch(cfg, ds, 1);
  EXPECT_FALSE(stats.valid);
  EXPECT_EQ(stats.error.rfind("SourceFailure: ", 0), 0u) << stats.error;
  EXPECT_LT(stats.patches_delivered, cfg.patches_per_epoch);

  cfg.epochs = 3;
  const auto trial = run_trial(cfg, ds, 1);
  EXPECT_FALSE(trial.valid);
  EXPECT_EQ(trial.per_epoch.size(), 1u);
  EXPECT_NE(trial.error.find("SourceFailure"), std::string::npos);
}

TEST_F(PipelineTest, TrialRunsEveryEpochWithDistinctSeeds) {
  const auto ds = open_local_dataset(dir_->path(), Variant::Zstd);
  auto cfg = small_config();
  cfg.epochs = 5;
  cfg.patches_per_epoch = 8;
  const auto trial = run_trial(cfg, ds, 42);
  ASSERT_TRUE(trial.valid);
  ASSERT_EQ(trial.per_epoch.size(), 5u);
  std::set<std::uint64_t> seeds;
  std::vector<double> mbps;
  for (std::uint32_t e = 0; e < 5; ++e) {
    EXPECT_EQ(trial.per_epoch[e].seed, epoch_seed(42, e));
    seeds.insert(trial.per_epoch[e].seed);
    mbps.push_back(trial.per_epoch[e].throughput_mbps);
  }
  EXPECT_EQ(seeds.size(), 5u);
  const auto [m, s] = mean_std(mbps);
  EXPECT_DOUBLE_EQ(trial.mean_mbps, m);
  EXPECT_DOUBLE_EQ(trial.std_mbps, s);
}

TEST_F(PipelineTest, ConstantLatencyTrialIsStable) {
  SourceProfile profile = SourceProfile::desk();
  profile.per_request_latency_ms = 20.0;
  auto store = SimulatedStore::create(profile);
  const auto ds = open_simulated_dataset(dir_->path(), Variant::None, store);
  LoaderConfig cfg;
  cfg.compression = Variant::None;
  cfg.patch_size = 128;
  cfg.blocked = true;
  cfg.num_workers = 4;
  cfg.num_threads = 1;
  cfg.batch_size = 4;
  cfg.epochs = 5;
  cfg.patches_per_epoch = 32;
  const auto trial = run_trial(cfg, ds, 9);
  ASSERT_TRUE(trial.valid);
  EXPECT_LT(trial.std_mbps / trial.mean_mbps, 0.05)
      << trial.mean_mbps << " +- " << trial.std_mbps;
}

TEST_F(PipelineTest, TrialLogIsOneJsonObjectPerEpoch) {
  const auto ds = open_local_dataset(dir_->path(), Variant::Zstd);
  auto cfg = small_config();
  cfg.epochs = 3;
  cfg.patches_per_epoch = 4;
  const auto trial = run_trial(cfg, ds, 8);
  testing::TempDir out;
  append_trial_log(out / "trials.jsonl", trial, "unit");
  append_trial_log(out / "trials.jsonl", trial);
  const Bytes raw = testing::read_file(out / "trials.jsonl");
  std::istringstream lines(std::string(raw.begin(), raw.end()));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("schema_version"), kTrialLogSchemaVersion);
    EXPECT_EQ(j.at("config_hash"), cfg.hash_hex());
    EXPECT_EQ(j.at("config").at("compression"), "zstd");
    EXPECT_EQ(j.at("epoch"), n % 3);
    const auto& s = trial.per_epoch[n % 3];
    EXPECT_EQ(j.at("decoded_bytes"), s.decoded_bytes);
    EXPECT_EQ(j.at("network_bytes"), s.network_bytes);
    EXPECT_EQ(j.at("tiles_fetched"), s.tiles_fetched);
    EXPECT_EQ(j.at("patches_delivered"), s.patches_delivered);
    EXPECT_DOUBLE_EQ(j.at("elapsed_s").get<double>(), s.elapsed_s);
    EXPECT_DOUBLE_EQ(j.at("throughput_mbps").get<double>(), s.throughput_mbps);
    EXPECT_EQ(j.at("valid"), true);
    EXPECT_EQ(j.contains("label"), n < 3);
    ++n;
  }
  EXPECT_EQ(n, 6);
}

}  // namespace
}  // namespace cogstream

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

#include "cogstream/model.hpp"

#include <gtest/gtest.h>

#include <map>

#include "test_support.hpp"

namespace cogstream {
namespace {

constexpr std::uint32_t kSize = 1024;
constexpr std::uint32_t kTile = 256;

class ModelTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    for (int s = 0; s < 2; ++s) {
      const Raster r = generate_synthetic_scene(kSize, kSize, 4, 300 + s, 0.5);
      for (Variant v : kAllVariants) {
        write_file_atomic(dir_->path() / ("scene_00" + std::to_string(s) + "_" +
                                          std::string(variant_name(v)) + ".tif"),
                          write_cog(r, scheme_for(v), {kTile}));
      }
    }
    catalog_ = new DatasetCatalog([](Variant v) { return open_local_dataset(dir_->path(), v); });
    data_ = new ModelDataset(ModelDataset::from(lookup()));
  }
  static void TearDownTestSuite() {
    delete data_;
    delete catalog_;
    delete dir_;
  }
  static DatasetLookup lookup() {
    return [](Variant v) -> const Dataset& { return catalog_->get(v); };
  }

  static SourceProfile latency(double ms) {
    SourceProfile p = SourceProfile::desk();
    p.per_request_latency_ms = ms;
    return p;
  }

  static LoaderConfig config(std::uint32_t w, std::uint32_t t, std::uint32_t p, bool blocked) {
    LoaderConfig c;
    c.compression = Variant::Zstd;
    c.num_workers = w;
    c.num_threads = t;
    c.patch_size = p;
    c.blocked = blocked;
    c.batch_size = 4;
    c.epochs = 1;
    c.patches_per_epoch = 64;
    return c;
  }

  static testing::TempDir* dir_;
  static DatasetCatalog* catalog_;
  static ModelDataset* data_;
};

testing::TempDir* ModelTest::dir_ = nullptr;
DatasetCatalog* ModelTest::catalog_ = nullptr;
ModelDataset* ModelTest::data_ = nullptr;

const CostModel kFree{};  // zero CPU cost

TEST_F(ModelTest, DatasetSummary) {
  EXPECT_EQ(data_->scenes, 2u);
  EXPECT_EQ(data_->bands, 4);
  EXPECT_EQ(data_->geometry, (RasterGeometry{kSize, kSize, kTile, kTile}));
  const auto& none = data_->tile_bytes[static_cast<std::size_t>(Variant::None)];
  ASSERT_EQ(none.size(), 2u);
  ASSERT_EQ(none[0].size(), 16u);
  EXPECT_EQ(none[0][5], std::uint64_t{kTile} * kTile * 4 * 2);
}

TEST_F(ModelTest, SerialLatencyIsPatchesTimesLatency) {
  const ThroughputModel m(*data_, latency(10), kFree);
  const auto s = m.simulate_epoch(config(1, 1, 256, true), 1);
  EXPECT_EQ(s.tiles_fetched, 64u);
  EXPECT_NEAR(s.elapsed_s, 64 * 0.010, 1e-9);
  EXPECT_EQ(s.decoded_bytes, 64ull * 256 * 256 * 4 * 2);
  EXPECT_DOUBLE_EQ(s.throughput_mbps, throughput_mbps(s.decoded_bytes, s.elapsed_s));
}

TEST_F(ModelTest, WorkersOverlapLatency) {
  const ThroughputModel m(*data_, latency(10), kFree);
  // 16 batches of 4 over 4 workers: 16 patches each, back to back.
  EXPECT_NEAR(m.simulate_epoch(config(4, 1, 256, true), 1).elapsed_s, 16 * 0.010, 1e-9);
  EXPECT_NEAR(m.simulate_epoch(config(16, 1, 256, true), 1).elapsed_s, 4 * 0.010, 1e-9);
}

TEST_F(ModelTest, ThreadSlotsOverlapTilesOfOnePatch) {
  const ThroughputModel m(*data_, latency(10), kFree);
  // Blocked p = 2k on an aligned grid: exactly 4 tiles per patch.
  for (auto [t, rounds] : {std::pair{1u, 4}, std::pair{2u, 2}, std::pair{4u, 1}, std::pair{32u, 1}}) {
    const auto s = m.simulate_epoch(config(1, t, 512, true), 2);
    EXPECT_EQ(s.tiles_fetched, 64u * 4);
    EXPECT_NEAR(s.elapsed_s, 64 * rounds * 0.010, 1e-9) << "t=" << t;
  }
}

TEST_F(ModelTest, ConcurrencyCeilingQueuesFifo) {
  SourceProfile p = latency(10);
  p.max_concurrent_requests = 4;
  const ThroughputModel m(*data_, p, kFree);
  EXPECT_NEAR(m.simulate_epoch(config(16, 1, 256, true), 1).elapsed_s, 16 * 0.010, 1e-9);
  // Two workers with 32 slots each reach only 2 x 4 tiles at a time.
  const auto inv = m.simulate_epoch(config(2, 32, 512, true), 1);
  EXPECT_NEAR(inv.elapsed_s, 64 * 0.010, 1e-9);
}

TEST_F(ModelTest, SharedLinkSerialisesTransfers) {
  SourceProfile p = latency(0);
  p.bandwidth_bytes_per_s = 100e6;
  const ThroughputModel m(*data_, p, kFree);
  const auto s = m.simulate_epoch(config(8, 4, 256, false), 4);
  EXPECT_NEAR(s.elapsed_s, static_cast<double>(s.network_bytes) / 100e6, 1e-9);
}

TEST_F(ModelTest, CpuWorkIsSharedByCores) {
  CostModel c;
  c.tile_s.fill(0.001);
  c.cores = 1;
  const ThroughputModel one(*data_, latency(0), c);
  auto cfg = config(8, 1, 512, true);
  const auto s = one.simulate_epoch(cfg, 3);
  EXPECT_NEAR(s.elapsed_s, 64 * 4 * 0.001, 1e-9);
  EXPECT_NEAR(s.decode_s, 64 * 4 * 0.001, 1e-9);
  c.cores = 4;
  const ThroughputModel four(*data_, latency(0), c);
  EXPECT_NEAR(four.simulate_epoch(cfg, 3).elapsed_s, 64 * 0.001, 1e-9);
}

TEST_F(ModelTest, PrefetchBoundWithSlowConsumer) {
  const ThroughputModel m(*data_, latency(1), kFree);
  auto cfg = config(4, 1, 256, true);
  cfg.prefetch_factor = 1;
  // The consumer dominates: 16 batches, 15 delays of 50 ms between them.
  const auto s = m.simulate_epoch(cfg, 5, std::chrono::milliseconds(50));
  EXPECT_NEAR(s.elapsed_s, 15 * 0.050 + 4 * 0.001, 1e-9);
}

TEST_F(ModelTest, AccountingMatchesTheRealEngine) {
  const ThroughputModel m(*data_, latency(0), kFree);
  const Dataset& ds = catalog_->get(Variant::Deflate6);
  for (bool blocked : {false, true}) {
    auto cfg = config(2, 2, 256, blocked);
    cfg.compression = Variant::Deflate6;
    const auto real = run_epoch(cfg, ds, 77);
    const auto sim = m.simulate_epoch(cfg, 77);
    EXPECT_EQ(sim.tiles_fetched, real.tiles_fetched);
    EXPECT_EQ(sim.network_bytes, real.network_bytes);
    EXPECT_EQ(sim.decoded_bytes, real.decoded_bytes);
    EXPECT_EQ(sim.patches_delivered, real.patches_delivered);
  }
}

TEST_F(ModelTest, LatencyBoundElapsedTracksTheRealEngine) {
  const SourceProfile profile = latency(20);
  const ThroughputModel m(*data_, profile, calibrate_costs(lookup(), 4));
  auto store = SimulatedStore::create(profile);
  const auto ds = open_simulated_dataset(dir_->path(), Variant::Zstd, store);
  auto cfg = config(4, 2, 256, false);
  cfg.patches_per_epoch = 32;
  const auto real = run_epoch(cfg, ds, 12);
  const auto sim = m.simulate_epoch(cfg, 12);
  EXPECT_GT(real.elapsed_s, 0.8 * sim.elapsed_s);
  EXPECT_LT(real.elapsed_s, 1.5 * sim.elapsed_s) << "real " << real.elapsed_s << " model " << sim.elapsed_s;
}

TEST_F(ModelTest, JitterIsSeededAndLeavesAccountingAlone) {
  SourceProfile p = latency(10);
  p.latency_jitter_ms = 10;
  const ThroughputModel m(*data_, p, kFree);
  const auto cfg = config(4, 2, 256, false);
  const auto a = m.simulate_epoch(cfg, 9);
  const auto b = m.simulate_epoch(cfg, 9);
  EXPECT_EQ(a.elapsed_s, b.elapsed_s);
  EXPECT_EQ(a.network_bytes, b.network_bytes);
  p.seed = 1;
  const ThroughputModel m2(*data_, p, kFree);
  const auto c = m2.simulate_epoch(cfg, 9);
  EXPECT_NE(a.elapsed_s, c.elapsed_s);
  EXPECT_EQ(a.network_bytes, c.network_bytes);
}

TEST_F(ModelTest, TrialUsesEpochSeeds) {
  const ThroughputModel m(*data_, latency(10), kFree);
  auto cfg = config(4, 1, 256, false);
  cfg.epochs = 3;
  const auto t = m.simulate_trial(cfg, 4);
  ASSERT_EQ(t.per_epoch.size(), 3u);
  for (std::uint32_t e = 0; e < 3; ++e) EXPECT_EQ(t.per_epoch[e].seed, epoch_seed(4, e));
  EXPECT_TRUE(t.valid);
  EXPECT_GT(t.mean_mbps, 0.0);
}

TEST_F(ModelTest, CalibrationMeasuresEveryVariant) {
  const CostModel c = calibrate_costs(lookup(), 2);
  for (Variant v : kAllVariants) EXPECT_GT(c.tile_cost(v), 0.0) << variant_name(v);
  EXPECT_GT(c.output_byte_s, 0.0);
  EXPECT_GE(c.cores, 1u);
}

TEST_F(ModelTest, RejectsBadInputs) {
  const ThroughputModel m(*data_, latency(10), kFree);
  auto cfg = config(4, 1, 256, false);
  cfg.num_workers = 5;
  EXPECT_COG_ERROR(m.simulate_epoch(cfg, 1), ErrorCode::InvalidConfig);
  SourceProfile bad = latency(-1);
  EXPECT_ANY_THROW(ThroughputModel(*data_, bad, kFree));
}

}  // namespace
}  // namespace cogstream

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

// One loader epoch end to end on local files (no injected latency), and the
// virtual-time model of the same epoch. Bytes processed are decoded patch
// bytes, so the reported rate is the loader throughput.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "cogstream/manifest.hpp"
#include "cogstream/model.hpp"
#include "cogstream/pipeline.hpp"

namespace {

using namespace cogstream;

const std::filesystem::path& dataset_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() / "cogstream_pipeline_bench";
    std::filesystem::remove_all(d);
    PrepareOptions o;
    o.out_dir = d;
    o.scenes = 2;
    o.width = 1024;
    o.height = 1024;
    o.tile_size = 256;
    prepare_dataset(o);
    return d;
  }();
  return dir;
}

DatasetCatalog& catalog() {
  static DatasetCatalog c([](Variant v) { return open_local_dataset(dataset_dir(), v); });
  return c;
}

LoaderConfig epoch_config(Variant v, bool blocked, std::uint32_t workers) {
  LoaderConfig c;
  c.compression = v;
  c.patch_size = 256;
  c.blocked = blocked;
  c.num_workers = workers;
  c.num_threads = 1;
  c.batch_size = 8;
  c.patches_per_epoch = 64;
  c.epochs = 1;
  return c;
}

void BM_LocalEpoch(benchmark::State& state) {
  const Variant v = kAllVariants[state.range(0)];
  const LoaderConfig cfg = epoch_config(v, state.range(1) != 0, 2);
  const Dataset& ds = catalog().get(v);
  std::uint64_t seed = 0;
  std::uint64_t bytes = 0;
  for (auto _ : state) {
    const ThroughputStats s = run_epoch(cfg, ds, seed++);
    if (!s.valid) state.SkipWithError(s.error.c_str());
    bytes += s.decoded_bytes;
  }
  state.SetLabel(std::string(variant_name(v)) + (cfg.blocked ? " blocked" : " random"));
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_LocalEpoch)
    ->ArgsProduct({{0, 2, 5}, {0, 1}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

void BM_ModelEpoch(benchmark::State& state) {
  static const ThroughputModel model = [] {
    DatasetLookup lookup = [](Variant v) -> const Dataset& { return catalog().get(v); };
    return ThroughputModel(ModelDataset::from(lookup), SourceProfile::paper(), calibrate_costs(lookup));
  }();
  LoaderConfig cfg = epoch_config(Variant::Zstd, true, static_cast<std::uint32_t>(state.range(0)));
  cfg.patches_per_epoch = 1024;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model.simulate_epoch(cfg, seed++));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * cfg.patches_per_epoch);
}
BENCHMARK(BM_ModelEpoch)->Arg(1)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

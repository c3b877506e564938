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

// Window placement and window-to-tile cover on a 2048x2048 raster of 512 px
// tiles, the per-patch bookkeeping every loader worker does.

#include <benchmark/benchmark.h>

#include "cogstream/sampler.hpp"

namespace {

using namespace cogstream;

const RasterGeometry kGeom{2048, 2048, 512, 512};

void BM_TilesForWindow(benchmark::State& state) {
  const auto p = static_cast<std::uint32_t>(state.range(0));
  SamplerRng rng(1);
  std::vector<WindowSpec> windows;
  for (int i = 0; i < 1024; ++i) windows.push_back(sample_random(kGeom, p, rng));
  std::size_t i = 0;
  std::size_t tiles = 0;
  for (auto _ : state) {
    tiles += tiles_for_window(kGeom, windows[i++ & 1023]).size();
  }
  benchmark::DoNotOptimize(tiles);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TilesForWindow)->Arg(128)->Arg(512)->Arg(1024);

void BM_Sample(benchmark::State& state) {
  const bool blocked = state.range(0) != 0;
  WindowSampler sampler(kGeom, SamplerPolicy{blocked, 256, 7});
  for (auto _ : state) benchmark::DoNotOptimize(sampler.next());
  state.SetLabel(blocked ? "blocked" : "random");
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Sample)->Arg(0)->Arg(1);

void BM_ExpectedTilesRandom(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(expected_tiles_random(kGeom, 512));
}
BENCHMARK(BM_ExpectedTilesRandom);

}  // namespace

BENCHMARK_MAIN();

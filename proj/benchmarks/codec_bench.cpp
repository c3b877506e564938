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

// Decode cost of one 512x512x4 uint16 tile per compression variant, and the
// encode side for comparison. Bytes processed are decoded (output) bytes.

#include <benchmark/benchmark.h>

#include <cstring>

#include "cogstream/cog.hpp"
#include "cogstream/codecs.hpp"

namespace {

using namespace cogstream;

constexpr std::uint32_t kTile = 512;
constexpr std::uint16_t kBands = 4;

const Bytes& raw_tile() {
  static const Bytes raw = [] {
    const Raster r = generate_synthetic_scene(kTile, kTile, kBands, 42, 0.8);
    Bytes b(r.byte_size());
    std::memcpy(b.data(), r.samples.data(), b.size());
    return b;
  }();
  return raw;
}

SampleLayout layout_for(const CompressionScheme& s) {
  return {static_cast<std::size_t>(kTile) * kBands * 2, kBands, s.default_predictor(), host_byte_order()};
}

void BM_Decode(benchmark::State& state) {
  const Variant v = kAllVariants[state.range(0)];
  const CompressionScheme scheme = scheme_for(v);
  const SampleLayout layout = layout_for(scheme);
  const Bytes encoded = encode(scheme, raw_tile(), layout);
  for (auto _ : state) {
    Bytes out = decode(scheme.codec, encoded, raw_tile().size(), layout);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(std::string(variant_name(v)) + " ratio " +
                 std::to_string(static_cast<double>(raw_tile().size()) / encoded.size()));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * raw_tile().size());
}
BENCHMARK(BM_Decode)->DenseRange(0, kAllVariants.size() - 1)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
  const Variant v = kAllVariants[state.range(0)];
  const CompressionScheme scheme = scheme_for(v);
  const SampleLayout layout = layout_for(scheme);
  for (auto _ : state) {
    Bytes out = encode(scheme, raw_tile(), layout);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(std::string(variant_name(v)));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * raw_tile().size());
}
BENCHMARK(BM_Encode)->DenseRange(0, kAllVariants.size() - 1)->Unit(benchmark::kMillisecond);

void BM_ReversePredictor(benchmark::State& state) {
  Bytes data = raw_tile();
  const SampleLayout layout = layout_for(CompressionScheme::lzw());
  for (auto _ : state) {
    reverse_horizontal_predictor(data, layout);
    benchmark::ClobberMemory();
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * data.size());
}
BENCHMARK(BM_ReversePredictor);

}  // namespace

BENCHMARK_MAIN();

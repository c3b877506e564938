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

// A virtual-time model of the loading engine.
//
// The model replays the engine's schedule (same epoch plan, round-robin batch
// split, per-worker request slots, patch barrier, prefetch bound and in-order
// consumer) against the simulated service's rules (FIFO concurrency ceiling,
// per-request latency plus seeded jitter, one serialised transfer link), with
// decode and assembly charged to a pool of CPU cores using per-tile costs
// measured on this machine. An epoch of any configuration takes milliseconds
// of real time, which makes it a practical objective for search experiments.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "cogstream/byte_source.hpp"
#include "cogstream/pipeline.hpp"

namespace cogstream {

/// CPU work per patch: `tile_s[variant]` for each fetched tile (read, decode
/// and predictor reversal) plus `output_byte_s` per delivered byte.
struct CostModel {
  std::array<double, kAllVariants.size()> tile_s{};
  double output_byte_s = 0.0;
  std::uint32_t cores = 1;

  double tile_cost(Variant v) const { return tile_s[static_cast<std::size_t>(v)]; }
};

using DatasetLookup = std::function<const Dataset&(Variant)>;

/// Times reading and decoding `sample_tiles` tiles from every variant's
/// dataset, and assembling one patch, on the calling thread.
CostModel calibrate_costs(const DatasetLookup& datasets, std::size_t sample_tiles = 8);

/// What the model needs from the datasets: geometry and every tile's size.
struct ModelDataset {
  RasterGeometry geometry;
  std::uint16_t bands = 0;
  std::size_t scenes = 0;
  /// [variant][scene][row-major tile index] -> stored byte count.
  std::array<std::vector<std::vector<std::uint64_t>>, kAllVariants.size()> tile_bytes;

  static ModelDataset from(const DatasetLookup& datasets);
};

class ThroughputModel {
 public:
  ThroughputModel(ModelDataset data, SourceProfile profile, CostModel costs);

  /// Virtual-time epoch. Elapsed runs from the first request to the last
  /// batch handed to the consumer; throughput as in the real engine.
  ThroughputStats simulate_epoch(const LoaderConfig& config, std::uint64_t seed,
                                 std::chrono::nanoseconds consumer_delay = {}) const;

  /// config.epochs epochs seeded exactly like run_trial().
  TrialResult simulate_trial(const LoaderConfig& config, std::uint64_t seed) const;

  const ModelDataset& data() const noexcept { return data_; }
  const SourceProfile& profile() const noexcept { return profile_; }
  const CostModel& costs() const noexcept { return costs_; }

 private:
  ModelDataset data_;
  SourceProfile profile_;
  CostModel costs_;
};

}  // namespace cogstream

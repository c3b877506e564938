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

// The patch-loading engine.
//
// An epoch is planned up front from one seeded window stream, cut into
// batches, and the batches are dealt round-robin to `num_workers` workers.
// Each worker owns one source handle per scene and a pool of `num_threads`
// request slots. For every patch it issues the covering tile requests through
// that pool, waits for all of them, decodes and crops on its own thread, and
// hands finished batches to the consumer through a queue of depth
// `prefetch_factor`. The consumer takes batches in plan order.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cogstream/byte_source.hpp"
#include "cogstream/cog.hpp"
#include "cogstream/config.hpp"
#include "cogstream/sampler.hpp"

namespace cogstream {

using SourceOpener = std::function<std::unique_ptr<ByteSource>(const std::string& name)>;

/// Scenes of one compression variant. Descriptors are parsed once on
/// construction (not part of any measured epoch); all scenes must share
/// geometry and band count.
class Dataset {
 public:
  Dataset(Variant variant, std::vector<std::string> names, SourceOpener opener);

  Variant variant() const noexcept { return variant_; }
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t scene) const { return names_.at(scene); }
  const CogDescriptor& descriptor(std::size_t scene) const { return descriptors_.at(scene); }
  const RasterGeometry& geometry() const noexcept { return geometry_; }
  std::uint16_t bands() const noexcept { return bands_; }

  /// A fresh, independent handle on one scene.
  std::unique_ptr<ByteSource> open(std::size_t scene) const { return opener_(names_.at(scene)); }

 private:
  Variant variant_;
  std::vector<std::string> names_;
  SourceOpener opener_;
  std::vector<CogDescriptor> descriptors_;
  RasterGeometry geometry_;
  std::uint16_t bands_ = 0;
};

/// `<dir>/*_<variant>.tif`, sorted by name.
std::vector<std::string> variant_file_names(const std::filesystem::path& dir, Variant variant);

Dataset open_local_dataset(const std::filesystem::path& dir, Variant variant);
Dataset open_simulated_dataset(const std::filesystem::path& dir, Variant variant,
                               std::shared_ptr<SimulatedStore> store);
Dataset open_remote_dataset(const std::string& base_url, std::vector<std::string> names,
                            Variant variant, RetryPolicy retry = {});

/// Datasets for several variants; a config selects one by its compression.
class DatasetCatalog {
 public:
  using Factory = std::function<Dataset(Variant)>;
  explicit DatasetCatalog(Factory factory) : factory_(std::move(factory)) {}

  /// Opens (and caches) the dataset for `variant` on first use.
  const Dataset& get(Variant variant);

 private:
  Factory factory_;
  std::map<Variant, Dataset> cache_;
};

struct PlannedPatch {
  std::uint32_t index = 0;
  std::uint32_t scene = 0;
  WindowSpec window;
};

/// The epoch's windows in delivery order. Depends only on the dataset
/// geometry, the scene count, the sampling fields of `config` and `seed`, so
/// every concurrency setting does exactly the same work.
std::vector<PlannedPatch> plan_epoch(const Dataset& dataset, const LoaderConfig& config,
                                     std::uint64_t seed);
std::vector<PlannedPatch> plan_epoch(const RasterGeometry& geometry, std::size_t scenes,
                                     const LoaderConfig& config, std::uint64_t seed);

struct Patch {
  Raster pixels;  // p x p x bands
  WindowSpec window;
  std::uint32_t scene = 0;
  std::uint32_t index = 0;
};

using TileMap = std::map<TileCoord, TilePixels>;

/// Crops `window` out of decoded tiles. Throws MissingTile.
Patch assemble_patch(const CogDescriptor& desc, const WindowSpec& window, const TileMap& tiles);

/// Independent slow path used to check delivered patches: one request
/// spanning every covering tile, then a per-pixel copy.
class ReferenceReader {
 public:
  ReferenceReader(ByteSource& source, const CogDescriptor& desc) : source_(source), desc_(desc) {}
  Raster read(const WindowSpec& window);

 private:
  ByteSource& source_;
  const CogDescriptor& desc_;
};

/// decoded_bytes / 10^6 / elapsed_seconds.
double throughput_mbps(std::uint64_t decoded_bytes, double elapsed_seconds);

struct ThroughputStats {
  std::uint64_t decoded_bytes = 0;
  std::uint64_t network_bytes = 0;
  std::uint64_t tiles_fetched = 0;
  std::uint64_t patches_delivered = 0;
  std::uint64_t requests = 0;
  double elapsed_s = 0.0;
  double throughput_mbps = 0.0;
  double decode_s = 0.0;  // summed decode time across workers
  std::uint64_t seed = 0;
  bool valid = true;
  std::string error;  // set when !valid
};

struct PatchEvent {
  std::uint32_t index = 0;
  std::uint32_t batch = 0;
  std::uint32_t worker = 0;
  std::uint32_t scene = 0;
  WindowSpec window;
  std::vector<RequestRecord> requests;
  Clock::time_point assembled{};
};

struct BatchEvent {
  std::uint32_t index = 0;
  std::uint32_t worker = 0;
  Clock::time_point started{};
  Clock::time_point completed{};
  Clock::time_point consumed{};
};

/// Full timeline of one epoch, for checking the concurrency contract.
struct EpochTrace {
  Clock::time_point start{};
  Clock::time_point end{};
  std::vector<PatchEvent> patches;  // by patch index
  std::vector<BatchEvent> batches;  // by batch index
};

struct EngineOptions {
  /// Sleep after receiving each batch, emulating a training step.
  std::chrono::nanoseconds consumer_delay{0};
  /// Check every n-th delivered patch against ReferenceReader after the
  /// timed section (0 = off). A mismatch throws PatchMismatch.
  std::uint32_t verify_every = 0;
  /// Filled when set.
  EpochTrace* trace = nullptr;
  /// Called on the consumer thread with each batch, inside the timed section.
  std::function<void(const std::vector<Patch>&)> on_batch;
};

/// Runs one epoch. Source or decode failures abort the epoch and come back
/// as stats with valid == false and `error` set (prefixed "SourceFailure: "
/// for fetch failures).
ThroughputStats run_epoch(const LoaderConfig& config, const Dataset& dataset, std::uint64_t seed,
                          const EngineOptions& options = {});

struct TrialResult {
  LoaderConfig config;
  std::uint64_t seed = 0;
  std::vector<ThroughputStats> per_epoch;
  double mean_mbps = 0.0;
  double std_mbps = 0.0;  // population standard deviation over epochs
  bool valid = true;
  std::string error;
};

/// Seed of epoch `epoch` within a trial seeded `trial_seed`.
std::uint64_t epoch_seed(std::uint64_t trial_seed, std::uint32_t epoch);

/// Runs config.epochs epochs. A failed epoch ends the trial, which is then
/// invalid; mean/std cover only the epochs that ran.
TrialResult run_trial(const LoaderConfig& config, const Dataset& dataset, std::uint64_t seed,
                      const EngineOptions& options = {});

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

/// Trial log: JSON lines, one object per epoch.
inline constexpr int kTrialLogSchemaVersion = 1;
std::string trial_log_lines(const TrialResult& trial, const std::string& label = {});
void append_trial_log(const std::filesystem::path& path, const TrialResult& trial,
                      const std::string& label = {});

}  // namespace cogstream

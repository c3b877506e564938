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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "cogstream/error.hpp"

namespace cogstream {

// --- Datasets ------------------------------------------------------------------

Dataset::Dataset(Variant variant, std::vector<std::string> names, SourceOpener opener)
    : variant_(variant), names_(std::move(names)), opener_(std::move(opener)) {
  if (names_.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "dataset for variant " + std::string(variant_name(variant_)) + " has no scenes");
  }
  descriptors_.reserve(names_.size());
  for (const auto& name : names_) {
    auto source = opener_(name);
    descriptors_.push_back(parse_cog(*source));
    const CogDescriptor& d = descriptors_.back();
    if (descriptors_.size() == 1) {
      geometry_ = d.geometry();
      bands_ = d.bands;
    } else if (!(d.geometry() == geometry_) || d.bands != bands_) {
      throw Error(ErrorCode::InvalidArgument, "scene " + name + " differs in geometry from " +
                                                  names_.front());
    }
  }
}

std::vector<std::string> variant_file_names(const std::filesystem::path& dir, Variant variant) {
  const std::string suffix = "_" + std::string(variant_name(variant)) + ".tif";
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      names.push_back(name);
    }
  }
  if (ec) throw Error(ErrorCode::NotFound, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(names.begin(), names.end());
  return names;
}

Dataset open_local_dataset(const std::filesystem::path& dir, Variant variant) {
  return Dataset(variant, variant_file_names(dir, variant),
                 [dir](const std::string& name) { return open_local(dir / name); });
}

Dataset open_simulated_dataset(const std::filesystem::path& dir, Variant variant,
                               std::shared_ptr<SimulatedStore> store) {
  return Dataset(variant, variant_file_names(dir, variant),
                 [dir, store](const std::string& name) { return store->open(dir / name); });
}

Dataset open_remote_dataset(const std::string& base_url, std::vector<std::string> names,
                            Variant variant, RetryPolicy retry) {
  std::string base = base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  return Dataset(variant, std::move(names), [base, retry](const std::string& name) {
    return open_remote(base + "/" + name, retry);
  });
}

const Dataset& DatasetCatalog::get(Variant variant) {
  auto it = cache_.find(variant);
  if (it == cache_.end()) it = cache_.emplace(variant, factory_(variant)).first;
  return it->second;
}

// --- Planning and assembly ----------------------------------------------------

std::vector<PlannedPatch> plan_epoch(const Dataset& dataset, const LoaderConfig& config,
                                     std::uint64_t seed) {
  return plan_epoch(dataset.geometry(), dataset.size(), config, seed);
}

std::vector<PlannedPatch> plan_epoch(const RasterGeometry& geometry, std::size_t scenes,
                                     const LoaderConfig& config, std::uint64_t seed) {
  WindowSampler sampler(geometry, SamplerPolicy{config.blocked, config.patch_size, seed});
  std::vector<PlannedPatch> plan(config.patches_per_epoch);
  for (std::uint32_t i = 0; i < config.patches_per_epoch; ++i) {
    plan[i].index = i;
    plan[i].scene = static_cast<std::uint32_t>(uniform_below(sampler.rng(), scenes));
    plan[i].window = sampler.next();
  }
  return plan;
}

Patch assemble_patch(const CogDescriptor& desc, const WindowSpec& window, const TileMap& tiles) {
  Patch patch;
  patch.window = window;
  patch.pixels = Raster(window.width, window.height, desc.bands);
  const std::size_t px = desc.bands;
  for (const TileCoord& tc : tiles_for_window(desc, window)) {
    const auto it = tiles.find(tc);
    if (it == tiles.end()) {
      throw Error(ErrorCode::MissingTile, "tile (" + std::to_string(tc.tx) + ", " +
                                              std::to_string(tc.ty) + ") not supplied");
    }
    const TilePixels& tile = it->second;
    const std::uint32_t tile_x0 = tc.tx * desc.tile_width;
    const std::uint32_t tile_y0 = tc.ty * desc.tile_height;
    const std::uint32_t x0 = std::max(window.col_off, tile_x0);
    const std::uint32_t x1 = std::min(window.col_off + window.width, tile_x0 + desc.tile_width);
    const std::uint32_t y0 = std::max(window.row_off, tile_y0);
    const std::uint32_t y1 = std::min(window.row_off + window.height, tile_y0 + desc.tile_height);
    const std::size_t run = static_cast<std::size_t>(x1 - x0) * px;
    for (std::uint32_t y = y0; y < y1; ++y) {
      const std::uint16_t* src =
          tile.samples.data() + (static_cast<std::size_t>(y - tile_y0) * tile.width + (x0 - tile_x0)) * px;
      std::uint16_t* dst = patch.pixels.samples.data() +
                           (static_cast<std::size_t>(y - window.row_off) * window.width +
                            (x0 - window.col_off)) * px;
      std::memcpy(dst, src, run * sizeof(std::uint16_t));
    }
  }
  return patch;
}

Raster ReferenceReader::read(const WindowSpec& window) {
  const auto cover = tiles_for_window(desc_, window);
  std::uint64_t lo = ~std::uint64_t{0};
  std::uint64_t hi = 0;
  for (const auto& tc : cover) {
    const auto e = tile_byte_extent(desc_, tc.tx, tc.ty);
    lo = std::min(lo, e.offset);
    hi = std::max(hi, e.offset + e.byte_count);
  }
  const Bytes span = source_.get_range(lo, hi - lo);
  Raster out(window.width, window.height, desc_.bands);
  for (const auto& tc : cover) {
    const auto e = tile_byte_extent(desc_, tc.tx, tc.ty);
    const TilePixels tile = decode_tile(
        desc_, std::span<const std::uint8_t>(span.data() + (e.offset - lo), e.byte_count));
    for (std::uint32_t y = 0; y < window.height; ++y) {
      for (std::uint32_t x = 0; x < window.width; ++x) {
        const std::uint32_t gx = window.col_off + x;
        const std::uint32_t gy = window.row_off + y;
        if (gx / desc_.tile_width != tc.tx || gy / desc_.tile_height != tc.ty) continue;
        for (std::uint16_t b = 0; b < desc_.bands; ++b) {
          out.at(x, y, b) = tile.at(gx % desc_.tile_width, gy % desc_.tile_height, b);
        }
      }
    }
  }
  return out;
}

double throughput_mbps(std::uint64_t decoded_bytes, double elapsed_seconds) {
  if (elapsed_seconds <= 0.0) return 0.0;
  return static_cast<double>(decoded_bytes) / 1e6 / elapsed_seconds;
}

// --- Engine --------------------------------------------------------------------

namespace {

// Fixed set of request slots owned by one worker.
class FetchPool {
 public:
  explicit FetchPool(std::size_t threads) {
    for (std::size_t i = 0; i < threads; ++i) threads_.emplace_back([this] { loop(); });
  }
  ~FetchPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void submit(std::function<void()> task) {
    {
      std::lock_guard lock(mu_);
      tasks_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

 private:
  void loop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || !tasks_.empty(); });
        if (tasks_.empty()) return;
        task = std::move(tasks_.front());
        tasks_.pop_front();
      }
      task();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

struct ReadyBatch {
  std::uint32_t index = 0;
  std::vector<Patch> patches;
};

class Epoch {
 public:
  Epoch(const LoaderConfig& config, const Dataset& dataset, std::uint64_t seed,
        const EngineOptions& options)
      : config_(config),
        dataset_(dataset),
        options_(options),
        plan_(plan_epoch(dataset, config, seed)),
        batch_count_((config.patches_per_epoch + config.batch_size - 1) / config.batch_size),
        queues_(config.num_workers),
        first_request_ns_(std::numeric_limits<std::int64_t>::max()) {
    stats_.seed = seed;
    if (options_.trace) {
      options_.trace->patches.assign(plan_.size(), {});
      options_.trace->batches.assign(batch_count_, {});
    }
  }

  ThroughputStats run() {
    const auto launch = Clock::now();
    std::vector<std::thread> workers;
    workers.reserve(config_.num_workers);
    for (std::uint32_t w = 0; w < config_.num_workers; ++w) {
      workers.emplace_back([this, w] { worker(w); });
    }
    Clock::time_point end = launch;
    std::vector<Patch> to_verify;
    for (std::uint32_t b = 0; b < batch_count_; ++b) {
      ReadyBatch batch;
      {
        std::unique_lock lock(mu_);
        auto& q = queues_[b % config_.num_workers];
        cv_.wait(lock, [&] { return aborted_ || !q.empty(); });
        if (aborted_) break;
        batch = std::move(q.front());
        q.pop_front();
        // Stamped under the lock so the trace orders it against pushes.
        if (options_.trace) options_.trace->batches[b].consumed = Clock::now();
      }
      cv_.notify_all();
      for (auto& patch : batch.patches) {
        stats_.patches_delivered += 1;
        stats_.decoded_bytes += patch.pixels.byte_size();
        if (options_.verify_every && patch.index % options_.verify_every == 0) {
          to_verify.push_back(patch);
        }
      }
      if (options_.on_batch) options_.on_batch(batch.patches);
      end = Clock::now();
      if (b + 1 < batch_count_ && options_.consumer_delay.count() > 0) {
        std::this_thread::sleep_for(options_.consumer_delay);
      }
    }
    {
      std::lock_guard lock(mu_);
      finished_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers) t.join();

    const std::int64_t first = first_request_ns_.load();
    const auto start = first == std::numeric_limits<std::int64_t>::max()
                           ? launch
                           : Clock::time_point(Clock::duration(first));
    stats_.network_bytes = network_bytes_.load();
    stats_.tiles_fetched = tiles_fetched_.load();
    stats_.requests = requests_.load();
    stats_.decode_s = static_cast<double>(decode_ns_.load()) * 1e-9;
    stats_.elapsed_s = std::chrono::duration<double>(end - start).count();
    stats_.throughput_mbps = throughput_mbps(stats_.decoded_bytes, stats_.elapsed_s);
    if (options_.trace) {
      options_.trace->start = start;
      options_.trace->end = end;
    }
    if (aborted_) {
      stats_.valid = false;
      stats_.error = error_;
      return stats_;
    }
    verify(to_verify);
    return stats_;
  }

 private:
  void fail(const std::string& message) {
    {
      std::lock_guard lock(mu_);
      if (!aborted_) {
        aborted_ = true;
        error_ = message;
      }
    }
    cv_.notify_all();
  }

  bool should_stop() {
    std::lock_guard lock(mu_);
    return aborted_ || finished_;
  }

  void note_request(const RequestRecord& rec) {
    const std::int64_t t = rec.requested.time_since_epoch().count();
    std::int64_t cur = first_request_ns_.load();
    while (t < cur && !first_request_ns_.compare_exchange_weak(cur, t)) {
    }
  }

  void worker(std::uint32_t w) {
    const std::uint32_t slots =
        std::min(config_.num_threads, max_tiles_per_window(dataset_.geometry(), config_.patch_size));
    std::unique_ptr<FetchPool> pool;
    if (slots > 1) pool = std::make_unique<FetchPool>(slots);
    std::vector<std::unique_ptr<ByteSource>> handles(dataset_.size());

    for (std::uint32_t b = w; b < batch_count_; b += config_.num_workers) {
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] {
          return aborted_ || finished_ || queues_[w].size() < config_.prefetch_factor;
        });
        if (aborted_ || finished_) return;
      }
      ReadyBatch batch;
      batch.index = b;
      const auto started = Clock::now();
      const std::uint32_t first = b * config_.batch_size;
      const std::uint32_t last = std::min<std::uint32_t>(first + config_.batch_size,
                                                         static_cast<std::uint32_t>(plan_.size()));
      for (std::uint32_t i = first; i < last; ++i) {
        if (should_stop()) return;
        auto patch = load_patch(plan_[i], b, w, handles, pool.get());
        if (!patch) return;
        batch.patches.push_back(std::move(*patch));
      }
      {
        std::lock_guard lock(mu_);
        if (options_.trace) {
          auto& ev = options_.trace->batches[b];
          ev.index = b;
          ev.worker = w;
          ev.started = started;
          ev.completed = Clock::now();
        }
        queues_[w].push_back(std::move(batch));
      }
      cv_.notify_all();
    }
  }

  std::optional<Patch> load_patch(const PlannedPatch& planned, std::uint32_t batch,
                                  std::uint32_t w, std::vector<std::unique_ptr<ByteSource>>& handles,
                                  FetchPool* pool) {
    const CogDescriptor& desc = dataset_.descriptor(planned.scene);
    auto& handle = handles[planned.scene];
    try {
      if (!handle) handle = dataset_.open(planned.scene);
    } catch (const Error& e) {
      fail("SourceFailure: " + std::string(e.what()));
      return std::nullopt;
    }
    ByteSource& source = *handle;

    const auto cover = tiles_for_window(desc, planned.window);
    const std::size_t n = cover.size();
    std::vector<Bytes> payloads(n);
    std::vector<RequestRecord> records(n);
    std::vector<std::string> errors(n);

    const auto fetch = [&](std::size_t i) {
      const auto extent = tile_byte_extent(desc, cover[i].tx, cover[i].ty);
      try {
        payloads[i] = source.get_range(extent.offset, extent.byte_count, &records[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    };

    if (pool && n > 1) {
      // Patch barrier: every tile request completes before decoding starts.
      std::mutex done_mu;
      std::condition_variable done_cv;
      std::size_t done = 0;
      for (std::size_t i = 0; i < n; ++i) {
        pool->submit([&, i] {
          fetch(i);
          {
            std::lock_guard lock(done_mu);
            ++done;
          }
          done_cv.notify_one();
        });
      }
      std::unique_lock lock(done_mu);
      done_cv.wait(lock, [&] { return done == n; });
    } else {
      for (std::size_t i = 0; i < n; ++i) fetch(i);
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (!errors[i].empty()) {
        fail("SourceFailure: " + errors[i]);
        return std::nullopt;
      }
      note_request(records[i]);
      network_bytes_ += records[i].length;
    }
    tiles_fetched_ += n;
    requests_ += n;

    try {
      TileMap tiles;
      DecodeStats ds;
      std::int64_t decode_ns = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tiles.emplace(cover[i], decode_tile(desc, payloads[i], &ds));
        decode_ns += ds.elapsed.count();
        Bytes().swap(payloads[i]);
      }
      decode_ns_ += decode_ns;
      Patch patch = assemble_patch(desc, planned.window, tiles);
      patch.scene = planned.scene;
      patch.index = planned.index;
      if (options_.trace) {
        auto& ev = options_.trace->patches[planned.index];
        ev.index = planned.index;
        ev.batch = batch;
        ev.worker = w;
        ev.scene = planned.scene;
        ev.window = planned.window;
        ev.requests = std::move(records);
        ev.assembled = Clock::now();
      }
      return patch;
    } catch (const Error& e) {
      fail(e.what());
      return std::nullopt;
    }
  }

  void verify(const std::vector<Patch>& patches) {
    std::map<std::uint32_t, std::unique_ptr<ByteSource>> sources;
    for (const Patch& patch : patches) {
      auto& src = sources[patch.scene];
      if (!src) src = dataset_.open(patch.scene);
      ReferenceReader reader(*src, dataset_.descriptor(patch.scene));
      if (!(reader.read(patch.window) == patch.pixels)) {
        throw Error(ErrorCode::PatchMismatch,
                    "patch " + std::to_string(patch.index) + " differs from the reference read");
      }
    }
  }

  const LoaderConfig& config_;
  const Dataset& dataset_;
  const EngineOptions& options_;
  std::vector<PlannedPatch> plan_;
  std::uint32_t batch_count_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::deque<ReadyBatch>> queues_;
  bool aborted_ = false;
  bool finished_ = false;
  std::string error_;

  std::atomic<std::uint64_t> network_bytes_{0};
  std::atomic<std::uint64_t> tiles_fetched_{0};
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::int64_t> decode_ns_{0};
  std::atomic<std::int64_t> first_request_ns_;
  ThroughputStats stats_;
};

}  // namespace

ThroughputStats run_epoch(const LoaderConfig& config, const Dataset& dataset, std::uint64_t seed,
                          const EngineOptions& options) {
  config.validate();
  if (config.patch_size > dataset.geometry().width || config.patch_size > dataset.geometry().height) {
    throw Error(ErrorCode::PatchTooLarge, "patch " + std::to_string(config.patch_size) +
                                              " exceeds the dataset's image size");
  }
  Epoch epoch(config, dataset, seed, options);
  return epoch.run();
}

std::uint64_t epoch_seed(std::uint64_t trial_seed, std::uint32_t epoch) {
  std::uint64_t x = trial_seed + 0x9e3779b97f4a7c15ull * (epoch + 1ull);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

TrialResult run_trial(const LoaderConfig& config, const Dataset& dataset, std::uint64_t seed,
                      const EngineOptions& options) {
  config.validate();
  TrialResult trial;
  trial.config = config;
  trial.seed = seed;
  std::vector<double> mbps;
  for (std::uint32_t e = 0; e < config.epochs; ++e) {
    trial.per_epoch.push_back(run_epoch(config, dataset, epoch_seed(seed, e), options));
    const auto& stats = trial.per_epoch.back();
    if (!stats.valid) {
      trial.valid = false;
      trial.error = "epoch " + std::to_string(e) + ": " + stats.error;
      break;
    }
    mbps.push_back(stats.throughput_mbps);
  }
  std::tie(trial.mean_mbps, trial.std_mbps) = mean_std(mbps);
  return trial;
}

std::string trial_log_lines(const TrialResult& trial, const std::string& label) {
  using nlohmann::json;
  const LoaderConfig& c = trial.config;
  const json config = {{"compression", variant_name(c.compression)},
                       {"patch_size", c.patch_size},
                       {"num_workers", c.num_workers},
                       {"num_threads", c.num_threads},
                       {"blocked", c.blocked},
                       {"prefetch_factor", c.prefetch_factor},
                       {"batch_size", c.batch_size},
                       {"epochs", c.epochs},
                       {"patches_per_epoch", c.patches_per_epoch}};
  std::string out;
  for (std::size_t e = 0; e < trial.per_epoch.size(); ++e) {
    const auto& s = trial.per_epoch[e];
    json line = {{"schema_version", kTrialLogSchemaVersion},
                 {"config_hash", c.hash_hex()},
                 {"config", config},
                 {"trial_seed", trial.seed},
                 {"epoch", e},
                 {"epoch_seed", s.seed},
                 {"decoded_bytes", s.decoded_bytes},
                 {"network_bytes", s.network_bytes},
                 {"tiles_fetched", s.tiles_fetched},
                 {"patches_delivered", s.patches_delivered},
                 {"requests", s.requests},
                 {"elapsed_s", s.elapsed_s},
                 {"throughput_mbps", s.throughput_mbps},
                 {"decode_s", s.decode_s},
                 {"valid", s.valid}};
    if (!s.valid) line["error"] = s.error;
    if (!label.empty()) line["label"] = label;
    out += line.dump() + "\n";
  }
  return out;
}

void append_trial_log(const std::filesystem::path& path, const TrialResult& trial,
                      const std::string& label) {
  std::ofstream f(path, std::ios::app);
  if (!f) throw Error(ErrorCode::Io, "cannot append to " + path.string());
  f << trial_log_lines(trial, label);
}

}  // namespace cogstream

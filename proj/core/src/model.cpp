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

#include <algorithm>
#include <deque>
#include <queue>
#include <thread>

#include "cogstream/error.hpp"

namespace cogstream {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Discrete-event simulation of one epoch. Times are seconds from the first
// request.
class EpochSim {
 public:
  EpochSim(const ModelDataset& data, const SourceProfile& profile, const CostModel& costs,
           const LoaderConfig& config, std::uint64_t seed, double consumer_delay_s)
      : data_(data),
        profile_(profile),
        costs_(costs),
        config_(config),
        seed_(seed),
        consumer_delay_s_(consumer_delay_s),
        plan_(plan_epoch(data.geometry, data.scenes, config, seed)),
        batch_count_((config.patches_per_epoch + config.batch_size - 1) / config.batch_size),
        workers_(config.num_workers),
        free_cores_(std::max<std::uint32_t>(1, costs.cores)) {
    const std::uint32_t slots =
        std::min(config.num_threads, max_tiles_per_window(data.geometry, config.patch_size));
    for (std::uint32_t w = 0; w < config.num_workers; ++w) {
      workers_[w].next_batch = w;
      workers_[w].slots = std::max<std::uint32_t>(1, slots);
    }
    patch_bytes_ = static_cast<std::uint64_t>(config.patch_size) * config.patch_size * data.bands * 2;
    stats_.seed = seed;
  }

  ThroughputStats run() {
    for (std::uint32_t w = 0; w < config_.num_workers; ++w) start_batch(w);
    while (!events_.empty()) {
      Event e = events_.top();
      events_.pop();
      now_ = e.t;
      dispatch(e);
    }
    stats_.elapsed_s = end_;
    stats_.throughput_mbps = throughput_mbps(stats_.decoded_bytes, stats_.elapsed_s);
    return stats_;
  }

 private:
  enum class Kind : std::uint8_t { RequestDone, CpuDone, ConsumerFree };

  struct Event {
    double t;
    std::uint64_t seq;
    Kind kind;
    std::uint32_t worker;
    friend bool operator>(const Event& a, const Event& b) {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };

  struct Worker {
    std::uint32_t next_batch = 0;
    std::uint32_t batch = 0;
    std::uint32_t patch = 0;
    std::uint32_t patch_end = 0;
    std::uint32_t slots = 1;
    std::vector<std::uint64_t> lengths;  // current patch's tile sizes
    std::size_t issued = 0;
    std::size_t done = 0;
    std::deque<std::uint32_t> ready;  // completed, unconsumed batches
    bool waiting_for_room = false;
    bool finished = false;
  };

  struct Pending {
    std::uint32_t worker;
    std::uint64_t length;
  };

  void schedule(double t, Kind kind, std::uint32_t worker) {
    events_.push(Event{t, next_seq_++, kind, worker});
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case Kind::RequestDone:
        --in_flight_;
        if (!waiting_.empty()) {
          const Pending next = waiting_.front();
          waiting_.pop_front();
          admit(next);
        }
        tile_done(e.worker);
        break;
      case Kind::CpuDone:
        ++free_cores_;
        if (!cpu_queue_.empty()) {
          const auto [w, cost] = cpu_queue_.front();
          cpu_queue_.pop_front();
          run_cpu(w, cost);
        }
        patch_done(e.worker);
        break;
      case Kind::ConsumerFree:
        consumer_busy_ = false;
        consume();
        break;
    }
  }

  void start_batch(std::uint32_t w) {
    Worker& wk = workers_[w];
    if (wk.next_batch >= batch_count_) {
      wk.finished = true;
      return;
    }
    if (wk.ready.size() >= config_.prefetch_factor) {
      wk.waiting_for_room = true;
      return;
    }
    wk.batch = wk.next_batch;
    wk.next_batch += config_.num_workers;
    wk.patch = wk.batch * config_.batch_size;
    wk.patch_end = std::min<std::uint32_t>(wk.patch + config_.batch_size,
                                           static_cast<std::uint32_t>(plan_.size()));
    start_patch(w);
  }

  void start_patch(std::uint32_t w) {
    Worker& wk = workers_[w];
    const PlannedPatch& pp = plan_[wk.patch];
    const auto& sizes =
        data_.tile_bytes[static_cast<std::size_t>(config_.compression)][pp.scene];
    wk.lengths.clear();
    for (const TileCoord& tc : tiles_for_window(data_.geometry, pp.window)) {
      wk.lengths.push_back(sizes[static_cast<std::size_t>(tc.ty) * data_.geometry.tiles_x() + tc.tx]);
    }
    wk.issued = 0;
    wk.done = 0;
    const std::size_t first = std::min<std::size_t>(wk.slots, wk.lengths.size());
    for (std::size_t i = 0; i < first; ++i) issue(w);
  }

  void issue(std::uint32_t w) {
    Worker& wk = workers_[w];
    const Pending req{w, wk.lengths[wk.issued++]};
    stats_.tiles_fetched += 1;
    stats_.requests += 1;
    stats_.network_bytes += req.length;
    if (profile_.max_concurrent_requests > 0 && in_flight_ >= profile_.max_concurrent_requests) {
      waiting_.push_back(req);
    } else {
      admit(req);
    }
  }

  void admit(const Pending& req) {
    ++in_flight_;
    double complete = now_ + profile_.per_request_latency_ms * 1e-3;
    if (profile_.latency_jitter_ms > 0) {
      const std::uint64_t h = splitmix64(profile_.seed ^ seed_ ^ splitmix64(request_seq_));
      complete += static_cast<double>(h >> 11) * 0x1.0p-53 * profile_.latency_jitter_ms * 1e-3;
    }
    ++request_seq_;
    if (profile_.bandwidth_bytes_per_s > 0) {
      const double start = std::max(complete, link_free_);
      link_free_ = start + static_cast<double>(req.length) / profile_.bandwidth_bytes_per_s;
      complete = link_free_;
    }
    schedule(complete, Kind::RequestDone, req.worker);
  }

  void tile_done(std::uint32_t w) {
    Worker& wk = workers_[w];
    ++wk.done;
    if (wk.issued < wk.lengths.size()) issue(w);
    if (wk.done == wk.lengths.size()) {
      const double cost = static_cast<double>(wk.lengths.size()) * costs_.tile_cost(config_.compression) +
                          static_cast<double>(patch_bytes_) * costs_.output_byte_s;
      if (free_cores_ > 0) {
        run_cpu(w, cost);
      } else {
        cpu_queue_.emplace_back(w, cost);
      }
    }
  }

  void run_cpu(std::uint32_t w, double cost) {
    --free_cores_;
    stats_.decode_s += cost;
    schedule(now_ + cost, Kind::CpuDone, w);
  }

  void patch_done(std::uint32_t w) {
    Worker& wk = workers_[w];
    if (++wk.patch < wk.patch_end) {
      start_patch(w);
      return;
    }
    wk.ready.push_back(wk.batch);
    consume();
    start_batch(w);
  }

  void consume() {
    while (!consumer_busy_ && next_consume_ < batch_count_) {
      const std::uint32_t w = next_consume_ % config_.num_workers;
      Worker& wk = workers_[w];
      if (wk.ready.empty()) return;
      wk.ready.pop_front();
      const std::uint32_t first = next_consume_ * config_.batch_size;
      const std::uint32_t last = std::min<std::uint32_t>(first + config_.batch_size,
                                                         static_cast<std::uint32_t>(plan_.size()));
      stats_.patches_delivered += last - first;
      stats_.decoded_bytes += static_cast<std::uint64_t>(last - first) * patch_bytes_;
      end_ = now_;
      ++next_consume_;
      if (wk.waiting_for_room) {
        wk.waiting_for_room = false;
        start_batch(w);
      }
      if (consumer_delay_s_ > 0 && next_consume_ < batch_count_) {
        consumer_busy_ = true;
        schedule(now_ + consumer_delay_s_, Kind::ConsumerFree, 0);
      }
    }
  }

  const ModelDataset& data_;
  const SourceProfile& profile_;
  const CostModel& costs_;
  const LoaderConfig& config_;
  std::uint64_t seed_;
  double consumer_delay_s_;
  std::vector<PlannedPatch> plan_;
  std::uint32_t batch_count_;
  std::uint64_t patch_bytes_ = 0;

  std::vector<Worker> workers_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
  double end_ = 0.0;

  std::uint32_t in_flight_ = 0;
  std::deque<Pending> waiting_;
  std::uint64_t request_seq_ = 0;
  double link_free_ = 0.0;

  std::uint32_t free_cores_;
  std::deque<std::pair<std::uint32_t, double>> cpu_queue_;

  std::uint32_t next_consume_ = 0;
  bool consumer_busy_ = false;

  ThroughputStats stats_;
};

}  // namespace

CostModel calibrate_costs(const DatasetLookup& datasets, std::size_t sample_tiles) {
  if (sample_tiles == 0) throw Error(ErrorCode::InvalidArgument, "sample_tiles must be positive");
  CostModel costs;
  costs.cores = std::max(1u, std::thread::hardware_concurrency());
  for (Variant v : kAllVariants) {
    const Dataset& ds = datasets(v);
    const CogDescriptor& desc = ds.descriptor(0);
    auto source = ds.open(0);
    const std::size_t n_tiles = desc.tile_index.entries.size();
    const std::size_t n = std::min(sample_tiles, n_tiles);
    // Spread the sample over the image; one untimed warm-up read.
    const auto extent = [&](std::size_t i) { return desc.tile_index.entries[(i * n_tiles) / n]; };
    decode_tile(desc, source->get_range(extent(0).offset, extent(0).byte_count));
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < n; ++i) {
      const TileExtent e = extent(i);
      decode_tile(desc, source->get_range(e.offset, e.byte_count));
    }
    costs.tile_s[static_cast<std::size_t>(v)] = seconds_since(t0) / static_cast<double>(n);
  }
  // Assembly: crop a tile-sized window straddling four tiles.
  const Dataset& ds = datasets(Variant::None);
  const CogDescriptor& desc = ds.descriptor(0);
  const RasterGeometry g = ds.geometry();
  const std::uint32_t p = std::min({g.tile_width, g.width / 2, g.height / 2});
  const WindowSpec w{std::min(g.width - p, g.tile_width / 2), std::min(g.height - p, g.tile_height / 2),
                     p, p};
  TileMap tiles;
  for (const TileCoord& tc : tiles_for_window(desc, w)) {
    tiles.emplace(tc, TilePixels(desc.tile_width, desc.tile_height, desc.bands));
  }
  assemble_patch(desc, w, tiles);
  const int reps = 8;
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) assemble_patch(desc, w, tiles);
  costs.output_byte_s =
      seconds_since(t0) / reps / (static_cast<double>(p) * p * desc.bands * 2);
  return costs;
}

ModelDataset ModelDataset::from(const DatasetLookup& datasets) {
  ModelDataset out;
  bool first = true;
  for (Variant v : kAllVariants) {
    const Dataset& ds = datasets(v);
    if (first) {
      out.geometry = ds.geometry();
      out.bands = ds.bands();
      out.scenes = ds.size();
      first = false;
    } else if (!(ds.geometry() == out.geometry) || ds.bands() != out.bands ||
               ds.size() != out.scenes) {
      throw Error(ErrorCode::InvalidArgument, "variant " + std::string(variant_name(v)) +
                                                  " differs in geometry or scene count");
    }
    auto& per_scene = out.tile_bytes[static_cast<std::size_t>(v)];
    for (std::size_t s = 0; s < ds.size(); ++s) {
      std::vector<std::uint64_t> sizes;
      for (const TileExtent& e : ds.descriptor(s).tile_index.entries) sizes.push_back(e.byte_count);
      per_scene.push_back(std::move(sizes));
    }
  }
  return out;
}

ThroughputModel::ThroughputModel(ModelDataset data, SourceProfile profile, CostModel costs)
    : data_(std::move(data)), profile_(std::move(profile)), costs_(costs) {
  profile_.validate();
  if (data_.scenes == 0) throw Error(ErrorCode::InvalidArgument, "model dataset has no scenes");
}

ThroughputStats ThroughputModel::simulate_epoch(const LoaderConfig& config, std::uint64_t seed,
                                                std::chrono::nanoseconds consumer_delay) const {
  config.validate();
  if (config.patch_size > data_.geometry.width || config.patch_size > data_.geometry.height) {
    throw Error(ErrorCode::PatchTooLarge, "patch " + std::to_string(config.patch_size) +
                                              " exceeds the dataset's image size");
  }
  EpochSim sim(data_, profile_, costs_, config, seed,
               std::chrono::duration<double>(consumer_delay).count());
  return sim.run();
}

TrialResult ThroughputModel::simulate_trial(const LoaderConfig& config, std::uint64_t seed) const {
  TrialResult trial;
  trial.config = config;
  trial.seed = seed;
  std::vector<double> mbps;
  for (std::uint32_t e = 0; e < config.epochs; ++e) {
    trial.per_epoch.push_back(simulate_epoch(config, epoch_seed(seed, e)));
    mbps.push_back(trial.per_epoch.back().throughput_mbps);
  }
  std::tie(trial.mean_mbps, trial.std_mbps) = mean_std(mbps);
  return trial;
}

}  // namespace cogstream

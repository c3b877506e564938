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

#include "commands.hpp"

#include <signal.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cogstream/error.hpp"

namespace cogstream::cli {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string short_config(const LoaderConfig& c) {
  return std::string(variant_name(c.compression)) + " p=" + std::to_string(c.patch_size) +
         " w=" + std::to_string(c.num_workers) + " t=" + std::to_string(c.num_threads) +
         (c.blocked ? " blocked" : " random") + " pf=" + std::to_string(c.prefetch_factor);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Param require_param(const std::string& name, const char* flag) {
  const auto p = parse_param(name);
  if (!p) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(flag) + " must name a parameter: compression, patch_size, num_workers, "
                                    "num_threads, blocked or prefetch_factor");
  }
  return *p;
}

}  // namespace

// --- prepare ---------------------------------------------------------------------

void cmd_prepare(const PrepareOptions& options) {
  if (options.width == 0 || options.height == 0 || options.bands == 0 || options.tile_size == 0 ||
      options.tile_size % 16 != 0) {
    throw Error(ErrorCode::InvalidArgument,
                "width, height and bands must be positive; tile size a positive multiple of 16");
  }
  if (!(options.smoothness >= 0.0 && options.smoothness <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "--smoothness must lie in [0, 1]");
  }
  const auto start = std::chrono::steady_clock::now();
  const DatasetManifest m = prepare_dataset(options);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::uintmax_t bytes = 0;
  for (const auto& f : m.files) bytes += std::filesystem::file_size(options.out_dir / f);
  std::cout << "prepared " << m.scenes << " scene(s) x " << m.variants.size() << " variants = "
            << m.files.size() << " files (" << fixed(bytes / 1e6, 1) << " MB) in "
            << options.out_dir.string() << " [" << fixed(secs, 1) << " s]\n";
}

// --- serve -----------------------------------------------------------------------

void cmd_serve(const ServeOptions& o) {
  if (!std::filesystem::is_directory(o.root)) {
    throw Error(ErrorCode::NotFound, "--root " + o.root.string() + " is not a directory");
  }
  SourceProfile profile{o.latency_ms, o.jitter_ms, o.bandwidth, o.max_concurrent, o.seed};
  profile.validate();

  // Block the stop signals before the server spawns threads so they are
  // delivered to sigtimedwait() below.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  auto server = serve(o.root, profile, o.bind, o.port);
  std::cout << "serving " << o.root.string() << " at " << server->base_url() << " (latency "
            << o.latency_ms << " ms, jitter " << o.jitter_ms << " ms)" << std::endl;

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(o.duration_s);
  while (true) {
    timespec wait{1, 0};
    if (o.duration_s > 0) {
      const auto left = deadline - std::chrono::steady_clock::now();
      if (left <= std::chrono::nanoseconds::zero()) break;
      const auto ns = std::min<std::int64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(left).count(), 1'000'000'000);
      wait = {0, static_cast<long>(ns)};
      if (ns >= 1'000'000'000) wait = {1, 0};
    }
    const int sig = sigtimedwait(&stop_signals, nullptr, &wait);
    if (sig == SIGINT || sig == SIGTERM) break;
  }
  server->stop();
  std::cout << "served " << server->log().size() << " requests" << std::endl;
}

// --- bench -----------------------------------------------------------------------

bool cmd_bench(const BenchOptions& o) {
  const LoaderConfig cfg = resolve_config(o.source, LoaderConfig{});
  Environment env(o.source);
  EngineOptions engine;
  engine.verify_every = o.verify_every;

  std::cout << "config  " << cfg.canonical() << "\n";
  std::cout << "source  " << o.source.source;
  if (env.kind() == SourceKind::Simulated || env.kind() == SourceKind::Model) {
    std::cout << " (latency " << env.profile().per_request_latency_ms << " ms, jitter "
              << env.profile().latency_jitter_ms << " ms)";
  }
  std::cout << std::endl;

  const TrialResult trial = env.objective(engine)(cfg, o.seed);
  for (std::size_t e = 0; e < trial.per_epoch.size(); ++e) {
    const ThroughputStats& s = trial.per_epoch[e];
    std::cout << "epoch " << e + 1 << "/" << cfg.epochs << "  " << fixed(s.throughput_mbps, 1)
              << " MB/s  decoded " << s.decoded_bytes << " B  network " << s.network_bytes
              << " B  tiles " << s.tiles_fetched << "  requests " << s.requests << "  "
              << fixed(s.elapsed_s, 3) << " s\n";
  }
  if (!o.log.empty()) {
    append_trial_log(o.log, trial, o.label);
    write_run_manifest(o.log, env.describe("bench", o.seed, {{"trial_log", o.log.string()}}));
  }
  if (!trial.valid) {
    std::cout << "trial failed: " << trial.error << std::endl;
    return false;
  }
  std::cout << "throughput " << fixed(trial.mean_mbps, 1) << " ± " << fixed(trial.std_mbps, 1)
            << " MB/s over " << trial.per_epoch.size() << " epochs" << std::endl;
  return true;
}

// --- tune ------------------------------------------------------------------------

void cmd_tune(const TuneOptions& o) {
  SearchStrategy strategy;
  if (o.strategy == "tpe") {
    strategy = SearchStrategy::Tpe;
  } else if (o.strategy == "random") {
    strategy = SearchStrategy::Random;
  } else {
    throw Error(ErrorCode::InvalidArgument, "--strategy must be tpe or random");
  }
  if (!(o.tpe.gamma > 0.0 && o.tpe.gamma < 1.0) || o.tpe.n_candidates == 0 || !(o.tpe.prior_weight > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "TPE needs 0 < gamma < 1, n_candidates > 0 and prior_weight > 0");
  }
  StudyOptions so;
  so.base = resolve_config(o.source, LoaderConfig{});
  so.strategy = strategy;
  so.tpe = o.tpe;
  so.log_path = o.out;
  so.on_trial = [](const Observation& obs) {
    std::cout << "trial " << obs.trial_index << "  " << short_config(obs.config) << "  ";
    if (obs.valid) {
      std::cout << fixed(obs.objective, 1) << " ± " << fixed(obs.objective_std, 1) << " MB/s\n";
    } else {
      std::cout << "failed: " << obs.error << "\n";
    }
    std::cout.flush();
  };
  Environment env(o.source);
  const Study study = run_study(SearchSpace::full(), env.objective(), o.trials, o.seed, so);
  write_run_manifest(o.out, env.describe("tune", o.seed,
                                         {{"study", o.out.string()}, {"strategy", o.strategy},
                                          {"trials", o.trials}}));
  if (const auto best = study.best()) {
    std::cout << "best    trial " << best->trial_index << "  " << short_config(best->config) << "  "
              << fixed(best->objective, 1) << " ± " << fixed(best->objective_std, 1) << " MB/s\n";
  } else {
    std::cout << "no valid trial\n";
  }
  std::cout << "study   " << o.out.string() << " (" << study.observations.size() << " trials)"
            << std::endl;
}

// --- grid ------------------------------------------------------------------------

void cmd_grid(const GridOptions& o) {
  const Param a = require_param(o.x, "--x");
  const Param b = require_param(o.y, "--y");
  if (o.reps == 0) throw Error(ErrorCode::InvalidArgument, "--reps must be positive");
  const LoaderConfig fixed_cfg = resolve_config(o.source, LoaderConfig{});
  Environment env(o.source);
  const GridResult grid = grid_search(a, b, fixed_cfg, o.reps, env.objective(), o.seed);
  write_text(o.out, grid.to_csv());
  write_run_manifest(o.out, env.describe("grid", o.seed,
                                         {{"csv", o.out.string()}, {"fixed", fixed_cfg.canonical()},
                                          {"reps", o.reps}}));
  std::cout << grid_report(grid) << "\nwrote " << o.out.string() << std::endl;
}

// --- report ----------------------------------------------------------------------

void cmd_report(const ReportOptions& o) {
  if (o.study.empty() && o.grids.empty()) {
    throw Error(ErrorCode::InvalidArgument, "report needs --study and/or --grid");
  }
  std::string md = "# cogstream report\n\n";
  if (!o.study.empty()) {
    Study study;
    study.observations = load_observations(o.study);
    std::optional<Observation> baseline;
    if (o.baseline_mbps) {
      baseline.emplace();
      baseline->config = baseline_config();
      baseline->objective = *o.baseline_mbps;
      baseline->objective_std = o.baseline_std;
    }
    md += study_report(study, o.top, baseline);
  }
  for (const auto& g : o.grids) {
    md += "\n" + grid_csv_report(read_text(g));
  }
  if (o.out.empty()) {
    std::cout << md;
  } else {
    write_text(o.out, md);
    std::cout << "wrote " << o.out.string() << std::endl;
  }
}

}  // namespace cogstream::cli

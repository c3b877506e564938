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

// cogstream: prepare | serve | bench | tune | grid | report.
//
// Exit status: 0 on success, 1 for invalid arguments or configuration,
// 2 for failures while running (I/O, network, failed trials).

#include <iostream>

#include <CLI11.hpp>

#include "cogstream/error.hpp"
#include "commands.hpp"

namespace {

using namespace cogstream;
using namespace cogstream::cli;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::PatchTooLarge:
    case ErrorCode::EmptySpace:
    case ErrorCode::UnsupportedScheme:
      return true;
    default:
      return false;
  }
}

void add_source_options(CLI::App* cmd, SourceOptions& s, const std::string& default_source) {
  s.source = default_source;
  cmd->add_option("--source", s.source, "Byte source: local, sim, remote or model")
      ->check(CLI::IsMember({"local", "sim", "remote", "model"}))
      ->capture_default_str();
  cmd->add_option("--data", s.data, "Prepared dataset directory (local, sim, model)");
  cmd->add_option("--url", s.url, "Base URL of a `cogstream serve` instance (remote)");
  cmd->add_option("--profile", s.profile,
                  "desk (10 ms, 256 patches/epoch) or paper (164 ms, 1024 patches/epoch)")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
  cmd->add_option("--config", s.config_path, "Loader config file (key = value lines)");
  cmd->add_option("--latency-ms", s.latency_ms, "Simulated per-request latency");
  cmd->add_option("--jitter-ms", s.jitter_ms, "Simulated latency jitter (uniform, +/-)");
  cmd->add_option("--bandwidth", s.bandwidth, "Simulated link bandwidth, bytes/s (0 = unlimited)");
  cmd->add_option("--max-concurrent", s.max_concurrent,
                  "Simulated concurrency ceiling (0 = unlimited)");
  cmd->add_option("--sim-seed", s.sim_seed, "Seed of the simulated jitter stream");
  cmd->add_option("--epochs", s.epochs, "Override epochs per trial");
  cmd->add_option("--patches", s.patches, "Override patches per epoch");
  cmd->add_option("--batch-size", s.batch_size, "Override batch size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cogstream: COG patch streaming benchmark and loader tuner"};
  app.require_subcommand(1);

  PrepareOptions prep;
  auto* prepare = app.add_subcommand("prepare", "Write synthetic scenes in every compression variant");
  prepare->add_option("--out", prep.out_dir, "Output directory")->required();
  prepare->add_option("--scenes", prep.scenes, "Number of scenes")->capture_default_str();
  prepare->add_option("--width", prep.width)->capture_default_str();
  prepare->add_option("--height", prep.height)->capture_default_str();
  prepare->add_option("--bands", prep.bands)->capture_default_str();
  prepare->add_option("--tile", prep.tile_size, "Tile edge in pixels")->capture_default_str();
  prepare->add_option("--seed", prep.seed)->capture_default_str();
  prepare->add_option("--smoothness", prep.smoothness, "0 = noise, 1 = constant")->capture_default_str();

  ServeOptions srv;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a directory over HTTP range requests");
  serve_cmd->add_option("--root", srv.root, "Directory to serve")->required();
  serve_cmd->add_option("--latency-ms", srv.latency_ms)->capture_default_str();
  serve_cmd->add_option("--jitter-ms", srv.jitter_ms)->capture_default_str();
  serve_cmd->add_option("--bandwidth", srv.bandwidth, "bytes/s, 0 = unlimited")->capture_default_str();
  serve_cmd->add_option("--max-concurrent", srv.max_concurrent, "0 = unlimited")->capture_default_str();
  serve_cmd->add_option("--port", srv.port, "0 picks a free port")->capture_default_str();
  serve_cmd->add_option("--bind", srv.bind)->capture_default_str();
  serve_cmd->add_option("--seed", srv.seed, "Jitter seed")->capture_default_str();
  serve_cmd->add_option("--duration", srv.duration_s, "Stop after this many seconds (0 = on signal)");

  BenchOptions bo;
  auto* bench = app.add_subcommand("bench", "Measure one loader configuration");
  add_source_options(bench, bo.source, "sim");
  bench->add_option("--seed", bo.seed, "Trial seed")->capture_default_str();
  bench->add_option("--log", bo.log, "Trial log (JSON lines, appended); empty disables")
      ->capture_default_str();
  bench->add_option("--label", bo.label, "Label stored with the log lines");
  bench->add_option("--verify-every", bo.verify_every,
                    "Check every n-th patch against a reference read (0 = off)");

  TuneOptions to;
  auto* tune = app.add_subcommand("tune", "Search the loader space");
  add_source_options(tune, to.source, "sim");
  tune->add_option("--trials", to.trials)->capture_default_str();
  tune->add_option("--seed", to.seed)->capture_default_str();
  tune->add_option("--out", to.out, "Study log (JSON lines); an existing log is resumed")
      ->capture_default_str();
  tune->add_option("--strategy", to.strategy)
      ->check(CLI::IsMember({"tpe", "random"}))
      ->capture_default_str();
  tune->add_option("--gamma", to.tpe.gamma)->capture_default_str();
  tune->add_option("--n-startup", to.tpe.n_startup)->capture_default_str();
  tune->add_option("--n-candidates", to.tpe.n_candidates)->capture_default_str();
  tune->add_option("--prior-weight", to.tpe.prior_weight)->capture_default_str();
  tune->add_option("--linear-forgetting", to.tpe.linear_forgetting, "0 disables")
      ->capture_default_str();

  GridOptions go;
  auto* grid = app.add_subcommand("grid", "Sweep two parameters");
  add_source_options(grid, go.source, "sim");
  grid->add_option("--x", go.x, "First parameter")->capture_default_str();
  grid->add_option("--y", go.y, "Second parameter")->capture_default_str();
  grid->add_option("--reps", go.reps, "Trials per cell")->capture_default_str();
  grid->add_option("--seed", go.seed)->capture_default_str();
  grid->add_option("--out", go.out, "CSV output")->capture_default_str();

  ReportOptions ro;
  auto* report = app.add_subcommand("report", "Render a study and/or grids as markdown");
  report->add_option("--study", ro.study, "Study log")->check(CLI::ExistingFile);
  report->add_option("--grid", ro.grids, "Grid CSV (repeatable)")->check(CLI::ExistingFile);
  report->add_option("--top", ro.top)->capture_default_str();
  report->add_option("--baseline-mbps", ro.baseline_mbps, "Baseline throughput to compare against");
  report->add_option("--baseline-std", ro.baseline_std)->capture_default_str();
  report->add_option("--out", ro.out, "Markdown output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*prepare) cmd_prepare(prep);
    if (*serve_cmd) cmd_serve(srv);
    if (*bench && !cmd_bench(bo)) return kExitRuntime;
    if (*tune) cmd_tune(to);
    if (*grid) cmd_grid(go);
    if (*report) cmd_report(ro);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

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

// The cogstream subcommands. Each returns normally on success and throws
// cogstream::Error on failure; main() maps error kinds to exit codes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cogstream/manifest.hpp"
#include "cogstream/tuner.hpp"
#include "sources.hpp"

namespace cogstream::cli {

void cmd_prepare(const PrepareOptions& options);

struct ServeOptions {
  std::filesystem::path root;
  double latency_ms = 10.0;
  double jitter_ms = 0.0;
  double bandwidth = 0.0;
  std::uint32_t max_concurrent = 0;
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 0;
  double duration_s = 0.0;  // 0 = until SIGINT/SIGTERM
};
void cmd_serve(const ServeOptions& options);

struct BenchOptions {
  SourceOptions source;
  std::uint64_t seed = 0;
  std::filesystem::path log = "trials.jsonl";
  std::string label;
  std::uint32_t verify_every = 0;
};
/// Returns false when the trial was invalid.
bool cmd_bench(const BenchOptions& options);

struct TuneOptions {
  SourceOptions source;
  std::uint32_t trials = 100;
  std::uint64_t seed = 0;
  std::filesystem::path out = "study.jsonl";
  std::string strategy = "tpe";
  TpeParams tpe;
};
void cmd_tune(const TuneOptions& options);

struct GridOptions {
  SourceOptions source;
  std::string x = "workers";
  std::string y = "threads";
  std::uint32_t reps = 5;
  std::uint64_t seed = 0;
  std::filesystem::path out = "grid.csv";
};
void cmd_grid(const GridOptions& options);

struct ReportOptions {
  std::filesystem::path study;
  std::vector<std::filesystem::path> grids;
  std::size_t top = 5;
  std::optional<double> baseline_mbps;
  double baseline_std = 0.0;
  std::filesystem::path out;  // empty = stdout
};
void cmd_report(const ReportOptions& options);

}  // namespace cogstream::cli

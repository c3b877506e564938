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

// Where the measured bytes come from, shared by bench, tune and grid.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "cogstream/byte_source.hpp"
#include "cogstream/config.hpp"
#include "cogstream/manifest.hpp"
#include "cogstream/model.hpp"
#include "cogstream/pipeline.hpp"
#include "cogstream/tuner.hpp"

namespace cogstream::cli {

enum class SourceKind { Local, Simulated, Remote, Model };

/// Flags common to every measuring command.
struct SourceOptions {
  std::string source = "sim";  // local | sim | remote | model
  std::filesystem::path data;
  std::string url;
  std::string profile = "desk";  // desk | paper
  std::optional<double> latency_ms;
  std::optional<double> jitter_ms;
  std::optional<double> bandwidth;
  std::optional<std::uint32_t> max_concurrent;
  std::uint64_t sim_seed = 0;
  std::string config_path;
  std::optional<std::uint32_t> epochs;
  std::optional<std::uint32_t> patches;
  std::optional<std::uint32_t> batch_size;
};

/// The simulated service profile after applying --profile and overrides.
SourceProfile resolve_profile(const SourceOptions& o);

/// Config defaults of the profile, then the config file, then the
/// --epochs/--patches/--batch-size overrides. Validates.
LoaderConfig resolve_config(const SourceOptions& o, const LoaderConfig& defaults);

/// Everything needed to measure: the catalog (or model) plus a description
/// of the run for the run manifest.
class Environment {
 public:
  explicit Environment(const SourceOptions& options);
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  SourceKind kind() const noexcept { return kind_; }
  const SourceProfile& profile() const noexcept { return profile_; }
  Objective objective(const EngineOptions& engine = {});
  /// Opens the dataset for `v` (engine sources only).
  const Dataset& dataset(Variant v) { return catalog_->get(v); }

  /// Run manifest: dataset, source, profile and the given outputs.
  nlohmann::json describe(const std::string& command, std::uint64_t seed,
                          const nlohmann::json& outputs) const;

 private:
  SourceOptions options_;
  SourceKind kind_;
  SourceProfile profile_;
  std::optional<DatasetManifest> manifest_;
  std::unique_ptr<DatasetCatalog> catalog_;
  std::shared_ptr<const ThroughputModel> model_;
};

/// Writes `<output>.run.json` describing how `output` was produced.
void write_run_manifest(const std::filesystem::path& output, const nlohmann::json& manifest);

}  // namespace cogstream::cli

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

#include "sources.hpp"

#include <fstream>

#include "cogstream/error.hpp"

namespace cogstream::cli {

namespace {

SourceKind parse_kind(const std::string& s) {
  if (s == "local") return SourceKind::Local;
  if (s == "sim") return SourceKind::Simulated;
  if (s == "remote") return SourceKind::Remote;
  if (s == "model") return SourceKind::Model;
  throw Error(ErrorCode::InvalidArgument, "--source must be one of local, sim, remote, model");
}

bool is_paper_profile(const std::string& profile) {
  if (profile == "paper") return true;
  if (profile == "desk") return false;
  throw Error(ErrorCode::InvalidArgument, "--profile must be desk or paper");
}

}  // namespace

SourceProfile resolve_profile(const SourceOptions& o) {
  SourceProfile p = is_paper_profile(o.profile) ? SourceProfile::paper() : SourceProfile::desk();
  if (o.latency_ms) p.per_request_latency_ms = *o.latency_ms;
  if (o.jitter_ms) p.latency_jitter_ms = *o.jitter_ms;
  if (o.bandwidth) p.bandwidth_bytes_per_s = *o.bandwidth;
  if (o.max_concurrent) p.max_concurrent_requests = *o.max_concurrent;
  p.seed = o.sim_seed;
  p.validate();
  return p;
}

LoaderConfig resolve_config(const SourceOptions& o, const LoaderConfig& defaults) {
  LoaderConfig base = defaults;
  base.patches_per_epoch = is_paper_profile(o.profile) ? 1024 : 256;
  LoaderConfig cfg = o.config_path.empty() ? base : LoaderConfig::load(o.config_path, base);
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.patches) cfg.patches_per_epoch = *o.patches;
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  cfg.validate();
  return cfg;
}

Environment::Environment(const SourceOptions& options)
    : options_(options), kind_(parse_kind(options.source)), profile_(resolve_profile(options)) {
  if (kind_ == SourceKind::Remote) {
    if (options_.url.empty()) throw Error(ErrorCode::InvalidArgument, "--source remote needs --url");
    manifest_ = DatasetManifest::fetch(options_.url);
    const DatasetManifest manifest = *manifest_;
    const std::string url = options_.url;
    catalog_ = std::make_unique<DatasetCatalog>([manifest, url](Variant v) {
      return open_remote_dataset(url, manifest.files_for(v), v);
    });
    return;
  }
  if (options_.data.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--source " + options_.source + " needs --data DIR");
  }
  if (!std::filesystem::is_directory(options_.data)) {
    throw Error(ErrorCode::NotFound, "dataset directory " + options_.data.string() + " does not exist");
  }
  if (std::filesystem::exists(options_.data / kManifestFileName)) {
    manifest_ = DatasetManifest::load(options_.data);
  }
  const std::filesystem::path dir = options_.data;
  if (kind_ == SourceKind::Simulated) {
    auto store = SimulatedStore::create(profile_);
    catalog_ = std::make_unique<DatasetCatalog>(
        [dir, store](Variant v) { return open_simulated_dataset(dir, v, store); });
    return;
  }
  catalog_ = std::make_unique<DatasetCatalog>([dir](Variant v) { return open_local_dataset(dir, v); });
  if (kind_ == SourceKind::Model) {
    DatasetLookup lookup = [this](Variant v) -> const Dataset& { return catalog_->get(v); };
    model_ = std::make_shared<const ThroughputModel>(ModelDataset::from(lookup), profile_,
                                                     calibrate_costs(lookup));
  }
}

Objective Environment::objective(const EngineOptions& engine) {
  if (model_) return model_objective(model_);
  return engine_objective(*catalog_, engine);
}

nlohmann::json Environment::describe(const std::string& command, std::uint64_t seed,
                                     const nlohmann::json& outputs) const {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = seed;
  j["source"] = options_.source;
  if (!options_.data.empty()) j["dataset_dir"] = std::filesystem::absolute(options_.data).string();
  if (!options_.url.empty()) j["url"] = options_.url;
  if (manifest_) {
    j["variants"] = manifest_->variants;
    j["scenes"] = manifest_->scenes;
    j["width"] = manifest_->width;
    j["height"] = manifest_->height;
    j["bands"] = manifest_->bands;
    j["tile_size"] = manifest_->tile_size;
  }
  j["profile"] = {{"name", options_.profile},
                  {"per_request_latency_ms", profile_.per_request_latency_ms},
                  {"latency_jitter_ms", profile_.latency_jitter_ms},
                  {"bandwidth_bytes_per_s", profile_.bandwidth_bytes_per_s},
                  {"max_concurrent_requests", profile_.max_concurrent_requests},
                  {"seed", profile_.seed}};
  if (model_) {
    const CostModel& c = model_->costs();
    nlohmann::json tiles;
    for (Variant v : kAllVariants) tiles[std::string(variant_name(v))] = c.tile_cost(v);
    j["model_costs"] = {{"tile_s", tiles}, {"output_byte_s", c.output_byte_s}, {"cores", c.cores}};
  }
  j["outputs"] = outputs;
  return j;
}

void write_run_manifest(const std::filesystem::path& output, const nlohmann::json& manifest) {
  const std::filesystem::path path = output.string() + ".run.json";
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << manifest.dump(2) << '\n';
  if (!f) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace cogstream::cli

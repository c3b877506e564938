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

// On-disk benchmark datasets: synthetic scenes written once per compression
// variant, described by a manifest.json next to the files.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cogstream/codecs.hpp"

namespace cogstream {

inline constexpr std::string_view kManifestFileName = "manifest.json";
inline constexpr int kManifestSchemaVersion = 1;

struct PrepareOptions {
  std::filesystem::path out_dir;
  std::uint32_t scenes = 2;
  std::uint32_t width = 2048;
  std::uint32_t height = 2048;
  std::uint16_t bands = 4;
  std::uint32_t tile_size = 512;
  std::uint64_t seed = 0;
  double smoothness = 0.8;  // see generate_synthetic_scene()
};

struct DatasetManifest {
  std::uint32_t scenes = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t bands = 0;
  std::uint32_t tile_size = 0;
  std::uint64_t seed = 0;
  double smoothness = 0.0;
  std::vector<std::string> variants;
  std::vector<std::string> files;  // relative to the manifest's directory

  /// Files of one variant, in scene order.
  std::vector<std::string> files_for(Variant v) const;

  std::string to_json() const;
  /// Throws InvalidArgument on malformed or unsupported manifests.
  static DatasetManifest parse(std::string_view json);
  /// Reads `dir/manifest.json` and checks every listed file exists.
  /// Throws Io or NotFound.
  static DatasetManifest load(const std::filesystem::path& dir);
  /// Fetches `<base_url>/manifest.json` over HTTP.
  static DatasetManifest fetch(const std::string& base_url);
};

/// Name of scene `index` in `variant`: scene_007_zstd.tif.
std::string scene_file_name(std::uint32_t index, Variant variant);

/// Generates `scenes` synthetic scenes (scene i seeded with seed + i) and
/// writes each in all six variants, then the manifest. Throws Io.
DatasetManifest prepare_dataset(const PrepareOptions& options);

}  // namespace cogstream

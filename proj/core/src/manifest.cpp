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

#include "cogstream/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cogstream/cog.hpp"
#include "cogstream/error.hpp"

namespace cogstream {

std::string scene_file_name(std::uint32_t index, Variant variant) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%03u_", index);
  return buf + std::string(variant_name(variant)) + ".tif";
}

std::vector<std::string> DatasetManifest::files_for(Variant v) const {
  const std::string suffix = "_" + std::string(variant_name(v)) + ".tif";
  std::vector<std::string> out;
  for (const auto& f : files) {
    if (f.size() > suffix.size() && f.compare(f.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(f);
    }
  }
  return out;
}

std::string DatasetManifest::to_json() const {
  const nlohmann::json j = {{"schema_version", kManifestSchemaVersion},
                            {"scenes", scenes},
                            {"width", width},
                            {"height", height},
                            {"bands", bands},
                            {"tile_size", tile_size},
                            {"seed", seed},
                            {"smoothness", smoothness},
                            {"variants", variants},
                            {"files", files}};
  return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::parse(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != kManifestSchemaVersion) {
      throw Error(ErrorCode::InvalidArgument, "unsupported manifest schema_version");
    }
    DatasetManifest m;
    m.scenes = j.at("scenes").get<std::uint32_t>();
    m.width = j.at("width").get<std::uint32_t>();
    m.height = j.at("height").get<std::uint32_t>();
    m.bands = j.at("bands").get<std::uint16_t>();
    m.tile_size = j.at("tile_size").get<std::uint32_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.smoothness = j.at("smoothness").get<double>();
    m.variants = j.at("variants").get<std::vector<std::string>>();
    m.files = j.at("files").get<std::vector<std::string>>();
    for (const auto& f : m.files) {
      const std::filesystem::path p(f);
      if (p.is_absolute() || p.has_parent_path()) {
        throw Error(ErrorCode::InvalidArgument, "manifest file entry '" + f + "' is not a plain name");
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed manifest: ") + e.what());
  }
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& dir) {
  const auto path = dir / kManifestFileName;
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  DatasetManifest m = parse(ss.str());
  for (const auto& name : m.files) {
    if (!std::filesystem::is_regular_file(dir / name)) {
      throw Error(ErrorCode::NotFound, "manifest lists missing file " + (dir / name).string());
    }
  }
  return m;
}

DatasetManifest DatasetManifest::fetch(const std::string& base_url) {
  std::string base = base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  auto source = open_remote(base + "/" + std::string(kManifestFileName));
  // The first request teaches the handle the object size.
  Bytes head = source->get_range(0, 1);
  const std::uint64_t size = source->size().value_or(head.size());
  Bytes body = size > head.size() ? source->get_range(0, size) : head;
  return parse(std::string_view(reinterpret_cast<const char*>(body.data()), body.size()));
}

DatasetManifest prepare_dataset(const PrepareOptions& o) {
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + o.out_dir.string() + ": " + ec.message());
  DatasetManifest m;
  m.scenes = o.scenes;
  m.width = o.width;
  m.height = o.height;
  m.bands = o.bands;
  m.tile_size = o.tile_size;
  m.seed = o.seed;
  m.smoothness = o.smoothness;
  for (Variant v : kAllVariants) m.variants.emplace_back(variant_name(v));
  WriteOptions wo;
  wo.tile_size = o.tile_size;
  for (std::uint32_t s = 0; s < o.scenes; ++s) {
    const Raster scene = generate_synthetic_scene(o.width, o.height, o.bands, o.seed + s, o.smoothness);
    for (Variant v : kAllVariants) {
      const std::string name = scene_file_name(s, v);
      write_file_atomic(o.out_dir / name, write_cog(scene, scheme_for(v), wo));
      m.files.push_back(name);
    }
  }
  const std::string text = m.to_json();
  write_file_atomic(o.out_dir / kManifestFileName,
                    std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                  text.size()));
  return m;
}

}  // namespace cogstream

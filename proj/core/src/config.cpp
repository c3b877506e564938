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

#include "cogstream/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cogstream/error.hpp"

namespace cogstream {

namespace {

template <std::size_t N>
std::string domain_text(const std::array<std::uint32_t, N>& values) {
  std::string out = "{";
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out + "}";
}

template <std::size_t N>
void check_domain(std::string_view key, std::uint32_t value,
                  const std::array<std::uint32_t, N>& values) {
  if (std::find(values.begin(), values.end(), value) == values.end()) {
    throw Error(ErrorCode::InvalidConfig, std::string(key) + "=" + std::to_string(value) +
                                              " is outside the search-space domain " +
                                              domain_text(values));
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint32_t parse_u32(std::string_view key, std::string_view value) {
  std::uint32_t out = 0;
  const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
  if (r.ec != std::errc{} || r.ptr != value.data() + value.size()) {
    throw Error(ErrorCode::InvalidConfig,
                std::string(key) + ": '" + std::string(value) + "' is not a non-negative integer");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "True" || value == "1") return true;
  if (value == "false" || value == "False" || value == "0") return false;
  throw Error(ErrorCode::InvalidConfig,
              std::string(key) + ": '" + std::string(value) + "' is not a boolean");
}

}  // namespace

void LoaderConfig::validate() const {
  check_domain("patch_size", patch_size, domain::kPatchSizes);
  check_domain("num_workers", num_workers, domain::kWorkers);
  check_domain("num_threads", num_threads, domain::kThreads);
  check_domain("prefetch_factor", prefetch_factor, domain::kPrefetch);
  if (batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch_size must be positive");
  if (epochs == 0 || patches_per_epoch == 0) {
    throw Error(ErrorCode::InvalidConfig, "epochs and patches_per_epoch must be positive");
  }
}

std::string LoaderConfig::canonical() const {
  std::string out;
  out += "compression=" + std::string(variant_name(compression));
  out += ";patch_size=" + std::to_string(patch_size);
  out += ";num_workers=" + std::to_string(num_workers);
  out += ";num_threads=" + std::to_string(num_threads);
  out += ";blocked=" + std::string(blocked ? "true" : "false");
  out += ";prefetch_factor=" + std::to_string(prefetch_factor);
  out += ";batch_size=" + std::to_string(batch_size);
  out += ";epochs=" + std::to_string(epochs);
  out += ";patches_per_epoch=" + std::to_string(patches_per_epoch);
  return out;
}

std::uint64_t LoaderConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string LoaderConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

void LoaderConfig::set(std::string_view key, std::string_view value) {
  if (key == "compression") {
    auto v = parse_variant(value);
    if (!v) {
      throw Error(ErrorCode::InvalidConfig,
                  "compression: '" + std::string(value) +
                      "' is not one of {none,deflate_1,deflate_6,deflate_9,lzw,zstd}");
    }
    compression = *v;
  } else if (key == "patch_size") {
    patch_size = parse_u32(key, value);
  } else if (key == "num_workers") {
    num_workers = parse_u32(key, value);
  } else if (key == "num_threads") {
    num_threads = parse_u32(key, value);
  } else if (key == "blocked") {
    blocked = parse_bool(key, value);
  } else if (key == "prefetch_factor") {
    prefetch_factor = parse_u32(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_u32(key, value);
  } else if (key == "epochs") {
    epochs = parse_u32(key, value);
  } else if (key == "patches_per_epoch") {
    patches_per_epoch = parse_u32(key, value);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown config key '" + std::string(key) + "'");
  }
}

LoaderConfig LoaderConfig::parse(std::string_view text) { return parse(text, LoaderConfig{}); }

LoaderConfig LoaderConfig::parse(std::string_view text, const LoaderConfig& base) {
  LoaderConfig cfg = base;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.emplace(key).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate key '" + std::string(key) + "'");
    }
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

LoaderConfig LoaderConfig::load(const std::string& path) { return load(path, LoaderConfig{}); }

LoaderConfig LoaderConfig::load(const std::string& path, const LoaderConfig& base) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), base);
}

std::string LoaderConfig::to_text() const {
  std::string out;
  std::string c = canonical();
  std::size_t start = 0;
  while (start < c.size()) {
    const auto end = std::min(c.find(';', start), c.size());
    const auto item = c.substr(start, end - start);
    const auto eq = item.find('=');
    out += item.substr(0, eq) + " = " + item.substr(eq + 1) + "\n";
    start = end + 1;
  }
  return out;
}

LoaderConfig baseline_config() {
  LoaderConfig c;
  c.compression = Variant::Deflate6;
  c.patch_size = 256;
  c.blocked = false;
  c.num_workers = 4;
  c.num_threads = 1;
  return c;
}

LoaderConfig remote_optimized_config() {
  LoaderConfig c;
  c.compression = Variant::Zstd;
  c.patch_size = 1024;
  c.blocked = true;
  c.num_workers = 64;
  c.num_threads = 1;
  c.prefetch_factor = 8;
  return c;
}

}  // namespace cogstream

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

// One point of the loader search space plus the benchmark constants, and
// its flat `key = value` text form.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "cogstream/codecs.hpp"

namespace cogstream {

namespace domain {
inline constexpr std::array<std::uint32_t, 4> kPatchSizes = {128, 256, 512, 1024};
inline constexpr std::array<std::uint32_t, 7> kWorkers = {1, 2, 4, 8, 16, 32, 64};
inline constexpr std::array<std::uint32_t, 6> kThreads = {1, 2, 4, 8, 16, 32};
inline constexpr std::array<std::uint32_t, 5> kPrefetch = {1, 2, 4, 8, 16};
}  // namespace domain

struct LoaderConfig {
  Variant compression = Variant::Deflate6;
  std::uint32_t patch_size = 256;
  std::uint32_t num_workers = 4;
  std::uint32_t num_threads = 1;
  bool blocked = false;
  std::uint32_t prefetch_factor = 2;
  std::uint32_t batch_size = 32;
  std::uint32_t epochs = 5;
  std::uint32_t patches_per_epoch = 1024;

  /// Throws InvalidConfig naming the offending key and its allowed values.
  void validate() const;

  /// Stable `key=value;...` rendering of every field; the basis of hash().
  std::string canonical() const;
  /// FNV-1a 64 of canonical().
  std::uint64_t hash() const;
  std::string hash_hex() const;

  /// Sets one key from its text value. Throws InvalidConfig for unknown keys
  /// or unparsable values (domain checks are left to validate()).
  void set(std::string_view key, std::string_view value);

  /// Parses `key = value` lines; '#' starts a comment. Unknown keys and
  /// duplicates are errors. Missing keys keep their defaults. Validates.
  static LoaderConfig parse(std::string_view text);
  /// As parse(), starting from `base` instead of the defaults.
  static LoaderConfig parse(std::string_view text, const LoaderConfig& base);
  static LoaderConfig load(const std::string& path);
  static LoaderConfig load(const std::string& path, const LoaderConfig& base);
  std::string to_text() const;

  friend bool operator==(const LoaderConfig&, const LoaderConfig&) = default;
};

/// The fixed baseline and the remote-optimised configurations used in the
/// headline comparison (benchmark constants left at their defaults).
LoaderConfig baseline_config();
LoaderConfig remote_optimized_config();

}  // namespace cogstream

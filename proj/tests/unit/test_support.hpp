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

#pragma once

#include <filesystem>
#include <string>

#include "cogstream/codecs.hpp"
#include "cogstream/error.hpp"

namespace cogstream::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);

std::filesystem::path fixture(const std::string& name);

}  // namespace cogstream::testing

/// EXPECT that `stmt` throws cogstream::Error carrying `code`.
#define EXPECT_COG_ERROR(stmt, expected_code)                                       \
  do {                                                                              \
    try {                                                                           \
      stmt;                                                                         \
      ADD_FAILURE() << "expected " << ::cogstream::error_code_name(expected_code)  \
                    << ", nothing thrown";                                          \
    } catch (const ::cogstream::Error& e_) {                                        \
      EXPECT_EQ(e_.code(), expected_code) << e_.what();                             \
    }                                                                               \
  } while (0)

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

#include <stdexcept>
#include <string>
#include <string_view>

namespace cogstream {

enum class ErrorCode {
  // codecs
  UnsupportedScheme,
  Corrupt,
  LengthMismatch,
  // cog_format
  NotTiff,
  StripedNotTiled,
  UnsupportedCodec,
  UnsupportedLayout,
  TruncatedHeader,
  InvalidIfd,
  TileOutOfRange,
  CorruptTile,
  SizeMismatch,
  // byte_source
  NotFound,
  RangeOutOfBounds,
  Http,
  Timeout,
  RetriesExhausted,
  ProtocolError,
  BindFailure,
  // sampler
  WindowOutOfBounds,
  PatchTooLarge,
  // pipeline
  MissingTile,
  SourceFailure,
  PatchMismatch,
  InvalidConfig,
  // tuner
  EmptySpace,
  InsufficientData,
  // general
  InvalidArgument,
  Io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int http_status = 0);

  ErrorCode code() const noexcept { return code_; }
  /// Non-zero only for ErrorCode::Http (and retries that ended on one).
  int http_status() const noexcept { return http_status_; }

 private:
  ErrorCode code_;
  int http_status_;
};

}  // namespace cogstream

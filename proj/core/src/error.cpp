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

#include "cogstream/error.hpp"

namespace cogstream {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnsupportedScheme: return "UnsupportedScheme";
    case ErrorCode::Corrupt: return "Corrupt";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotTiff: return "NotTiff";
    case ErrorCode::StripedNotTiled: return "StripedNotTiled";
    case ErrorCode::UnsupportedCodec: return "UnsupportedCodec";
    case ErrorCode::UnsupportedLayout: return "UnsupportedLayout";
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::InvalidIfd: return "InvalidIfd";
    case ErrorCode::TileOutOfRange: return "TileOutOfRange";
    case ErrorCode::CorruptTile: return "CorruptTile";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::RangeOutOfBounds: return "RangeOutOfBounds";
    case ErrorCode::Http: return "Http";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RetriesExhausted: return "RetriesExhausted";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::WindowOutOfBounds: return "WindowOutOfBounds";
    case ErrorCode::PatchTooLarge: return "PatchTooLarge";
    case ErrorCode::MissingTile: return "MissingTile";
    case ErrorCode::SourceFailure: return "SourceFailure";
    case ErrorCode::PatchMismatch: return "PatchMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptySpace: return "EmptySpace";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, int http_status)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code),
      http_status_(http_status) {}

}  // namespace cogstream

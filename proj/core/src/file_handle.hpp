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

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <utility>

#include "cogstream/codecs.hpp"
#include "cogstream/error.hpp"

namespace cogstream::detail {

// Read-only POSIX descriptor; pread keeps handles free of a shared cursor.
class FileHandle {
 public:
  static FileHandle open_read(const std::filesystem::path& path) {
    const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) {
      throw Error(errno == ENOENT ? ErrorCode::NotFound : ErrorCode::Io,
                  path.string() + ": " + std::strerror(errno));
    }
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
      const int err = errno;
      ::close(fd);
      throw Error(ErrorCode::Io, path.string() + ": " + std::strerror(err));
    }
    return FileHandle(fd, static_cast<std::uint64_t>(st.st_size));
  }

  FileHandle(FileHandle&& other) noexcept
      : fd_(std::exchange(other.fd_, -1)), size_(other.size_) {}
  FileHandle& operator=(FileHandle&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
      size_ = other.size_;
    }
    return *this;
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
  ~FileHandle() { reset(); }

  std::uint64_t size() const noexcept { return size_; }

  Bytes read_exact(std::uint64_t offset, std::uint64_t length) const {
    if (offset > size_ || length > size_ - offset) {
      throw Error(ErrorCode::RangeOutOfBounds,
                  "range [" + std::to_string(offset) + ", +" + std::to_string(length) +
                      ") beyond end of file (" + std::to_string(size_) + " bytes)");
    }
    Bytes out(length);
    std::uint64_t done = 0;
    while (done < length) {
      const ssize_t n = ::pread(fd_, out.data() + done, length - done,
                                static_cast<off_t>(offset + done));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::Io, std::string("pread: ") + std::strerror(errno));
      }
      if (n == 0) throw Error(ErrorCode::Io, "unexpected end of file");
      done += static_cast<std::uint64_t>(n);
    }
    return out;
  }

 private:
  FileHandle(int fd, std::uint64_t size) : fd_(fd), size_(size) {}
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  int fd_ = -1;
  std::uint64_t size_ = 0;
};

}  // namespace cogstream::detail

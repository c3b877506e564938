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

// Random-access byte reads over local files, HTTP range endpoints and a
// simulated object store with injected latency, bandwidth and a concurrency
// ceiling. Nothing here caches: every get_range() is one logged request.

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cogstream/codecs.hpp"

namespace cogstream {

using Clock = std::chrono::steady_clock;

struct RequestRecord {
  std::uint64_t id = 0;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  Clock::time_point requested{};  // when the caller entered get_range()
  Clock::time_point issue_time{};  // when the request left the client queue
  Clock::time_point complete_time{};
  std::chrono::nanoseconds injected_delay{0};  // simulated latency + transfer
  std::uint32_t attempts = 1;
  bool ok = true;
};

/// Append-only, thread-safe request history of one source handle.
class RequestLog {
 public:
  RequestLog() = default;
  RequestLog(const RequestLog&) = delete;
  RequestLog& operator=(const RequestLog&) = delete;

  std::uint64_t next_id() noexcept;
  void append(const RequestRecord& record);
  std::vector<RequestRecord> snapshot() const;
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<RequestRecord> records_;
  std::uint64_t next_id_ = 0;
};

class ByteSource {
 public:
  virtual ~ByteSource() = default;

  /// Reads [offset, offset + length). Throws RangeOutOfBounds past EOF.
  /// Safe to call concurrently. When `record` is given it receives a copy of
  /// the log entry written for this call.
  virtual Bytes get_range(std::uint64_t offset, std::uint64_t length,
                          RequestRecord* record = nullptr) = 0;

  /// Total size when known (remote sources learn it from Content-Range).
  virtual std::optional<std::uint64_t> size() const = 0;

  virtual std::string describe() const = 0;

  const RequestLog& log() const noexcept { return log_; }
  RequestLog& log() noexcept { return log_; }

 protected:
  RequestLog log_;
};

using SourceFactory = std::function<std::unique_ptr<ByteSource>()>;

/// Simulated object-store behaviour. Defaults mirror a cross-region blob
/// store: 164 ms per request, no jitter, unlimited bandwidth and concurrency.
struct SourceProfile {
  double per_request_latency_ms = 164.0;
  double latency_jitter_ms = 0.0;
  double bandwidth_bytes_per_s = 0.0;     // 0 = unlimited
  std::uint32_t max_concurrent_requests = 0;  // 0 = unlimited
  std::uint64_t seed = 0;

  static SourceProfile paper() { return {}; }
  static SourceProfile desk() { return {10.0, 0.0, 0.0, 0, 0}; }

  void validate() const;
};

/// Shared service state: FIFO concurrency ceiling, shared transfer link and
/// the seeded jitter stream. One instance models one storage service, so
/// every handle opened against it competes for the same ceiling.
class ServiceModel {
 public:
  explicit ServiceModel(SourceProfile profile);

  class Admission {
   public:
    Admission(Admission&&) noexcept;
    Admission& operator=(Admission&&) = delete;
    ~Admission();

    Clock::time_point issued() const noexcept { return issued_; }
    Clock::time_point complete_at() const noexcept { return complete_at_; }
    std::chrono::nanoseconds injected_delay() const noexcept { return complete_at_ - issued_; }

   private:
    friend class ServiceModel;
    Admission(ServiceModel* model, Clock::time_point issued, Clock::time_point complete_at);
    ServiceModel* model_;
    Clock::time_point issued_;
    Clock::time_point complete_at_;
  };

  /// Blocks until a concurrency slot is free (FIFO), then plans the request's
  /// completion time. The slot is held until the Admission is destroyed.
  Admission admit(std::uint64_t length);

  const SourceProfile& profile() const noexcept { return profile_; }
  std::uint32_t peak_in_flight() const;

 private:
  void release();
  std::chrono::nanoseconds jitter_for(std::uint64_t sequence) const;

  SourceProfile profile_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::uint64_t> waiting_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t sequence_ = 0;
  std::uint32_t in_flight_ = 0;
  std::uint32_t peak_in_flight_ = 0;
  Clock::time_point link_free_{};
};

/// Handles on one simulated service. Open one handle per worker; the
/// ceiling and link are shared across all of them.
class SimulatedStore : public std::enable_shared_from_this<SimulatedStore> {
 public:
  static std::shared_ptr<SimulatedStore> create(SourceProfile profile);

  std::unique_ptr<ByteSource> open(const std::filesystem::path& backing);
  const SourceProfile& profile() const noexcept { return model_.profile(); }
  ServiceModel& model() noexcept { return model_; }

 private:
  explicit SimulatedStore(SourceProfile profile) : model_(std::move(profile)) {}
  ServiceModel model_;
};

struct RetryPolicy {
  std::uint32_t max_attempts = 4;  // first try plus three retries
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(100),
                                                 std::chrono::milliseconds(200),
                                                 std::chrono::milliseconds(400)};
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{30000};
};

std::unique_ptr<ByteSource> open_local(const std::filesystem::path& path);
std::unique_ptr<ByteSource> open_remote(const std::string& url, RetryPolicy policy = {});
std::unique_ptr<ByteSource> open_simulated(const std::filesystem::path& backing,
                                           SourceProfile profile);

/// Serves files below `root` with HTTP/1.1 range semantics and per-request
/// latency injected according to `profile`. Responses carry no-store caching
/// headers. Stops on destruction.
class RangeServer {
 public:
  struct Options {
    std::filesystem::path root;
    SourceProfile profile = SourceProfile::desk();
    std::string bind_address = "127.0.0.1";
    int port = 0;  // 0 = pick a free port
    int worker_threads = 256;
  };

  explicit RangeServer(Options options);
  ~RangeServer();
  RangeServer(const RangeServer&) = delete;
  RangeServer& operator=(const RangeServer&) = delete;

  int port() const noexcept;
  std::string base_url() const;
  /// Requests served so far (offset/length as requested, times server-side).
  const RequestLog& log() const noexcept;
  /// Blocks the calling thread until stop() is called from elsewhere.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Starts a RangeServer; throws BindFailure if the address cannot be bound.
std::unique_ptr<RangeServer> serve(const std::filesystem::path& root, SourceProfile profile,
                                   const std::string& bind_address, int port = 0);

}  // namespace cogstream

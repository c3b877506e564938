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

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "cogstream/byte_source.hpp"
#include "cogstream/error.hpp"
#include "file_handle.hpp"

namespace cogstream {

std::uint64_t RequestLog::next_id() noexcept {
  std::lock_guard lock(mu_);
  return next_id_++;
}

void RequestLog::append(const RequestRecord& record) {
  std::lock_guard lock(mu_);
  records_.push_back(record);
}

std::vector<RequestRecord> RequestLog::snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t RequestLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

void RequestLog::clear() {
  std::lock_guard lock(mu_);
  records_.clear();
}

void SourceProfile::validate() const {
  if (per_request_latency_ms < 0 || latency_jitter_ms < 0 || bandwidth_bytes_per_s < 0) {
    throw Error(ErrorCode::InvalidArgument, "latency, jitter and bandwidth must be >= 0");
  }
}

// --- ServiceModel ----------------------------------------------------------

ServiceModel::ServiceModel(SourceProfile profile) : profile_(std::move(profile)) {
  profile_.validate();
}

ServiceModel::Admission::Admission(ServiceModel* model, Clock::time_point issued,
                                   Clock::time_point complete_at)
    : model_(model), issued_(issued), complete_at_(complete_at) {}

ServiceModel::Admission::Admission(Admission&& other) noexcept
    : model_(std::exchange(other.model_, nullptr)),
      issued_(other.issued_),
      complete_at_(other.complete_at_) {}

ServiceModel::Admission::~Admission() {
  if (model_) model_->release();
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::chrono::nanoseconds from_ms(double ms) {
  return std::chrono::nanoseconds(static_cast<std::int64_t>(ms * 1e6));
}

}  // namespace

std::chrono::nanoseconds ServiceModel::jitter_for(std::uint64_t sequence) const {
  if (profile_.latency_jitter_ms <= 0) return std::chrono::nanoseconds(0);
  const std::uint64_t h = splitmix64(profile_.seed ^ splitmix64(sequence));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return from_ms(u * profile_.latency_jitter_ms);
}

ServiceModel::Admission ServiceModel::admit(std::uint64_t length) {
  std::unique_lock lock(mu_);
  if (profile_.max_concurrent_requests > 0) {
    const std::uint64_t ticket = next_ticket_++;
    waiting_.push_back(ticket);
    cv_.wait(lock, [&] {
      return waiting_.front() == ticket && in_flight_ < profile_.max_concurrent_requests;
    });
    waiting_.pop_front();
    // The next waiter may also fit under the ceiling.
    cv_.notify_all();
  }
  ++in_flight_;
  peak_in_flight_ = std::max(peak_in_flight_, in_flight_);

  const Clock::time_point issued = Clock::now();
  const std::uint64_t seq = sequence_++;
  Clock::time_point complete = issued + from_ms(profile_.per_request_latency_ms) + jitter_for(seq);
  if (profile_.bandwidth_bytes_per_s > 0) {
    // Transfers share one link and are serialised on it.
    const Clock::time_point start = std::max(complete, link_free_);
    const auto transfer = std::chrono::nanoseconds(static_cast<std::int64_t>(
        static_cast<double>(length) / profile_.bandwidth_bytes_per_s * 1e9));
    link_free_ = start + transfer;
    complete = link_free_;
  }
  return Admission(this, issued, complete);
}

void ServiceModel::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_all();
}

std::uint32_t ServiceModel::peak_in_flight() const {
  std::lock_guard lock(mu_);
  return peak_in_flight_;
}

// --- Local and simulated sources -------------------------------------------

namespace {

class LocalSource : public ByteSource {
 public:
  explicit LocalSource(const std::filesystem::path& path)
      : path_(path), file_(detail::FileHandle::open_read(path)) {}

  Bytes get_range(std::uint64_t offset, std::uint64_t length, RequestRecord* record) override {
    RequestRecord rec;
    rec.id = log_.next_id();
    rec.offset = offset;
    rec.length = length;
    rec.requested = rec.issue_time = Clock::now();
    Bytes data = file_.read_exact(offset, length);
    rec.complete_time = Clock::now();
    log_.append(rec);
    if (record) *record = rec;
    return data;
  }

  std::optional<std::uint64_t> size() const override { return file_.size(); }
  std::string describe() const override { return "file://" + path_.string(); }

 private:
  std::filesystem::path path_;
  detail::FileHandle file_;
};

class SimulatedSource : public ByteSource {
 public:
  SimulatedSource(std::shared_ptr<SimulatedStore> store, const std::filesystem::path& path)
      : store_(std::move(store)), path_(path), file_(detail::FileHandle::open_read(path)) {}

  Bytes get_range(std::uint64_t offset, std::uint64_t length, RequestRecord* record) override {
    RequestRecord rec;
    rec.id = log_.next_id();
    rec.offset = offset;
    rec.length = length;
    rec.requested = Clock::now();
    if (offset > file_.size() || length > file_.size() - offset) {
      throw Error(ErrorCode::RangeOutOfBounds, "range [" + std::to_string(offset) + ", +" +
                                                   std::to_string(length) + ") beyond " +
                                                   describe());
    }
    Bytes data;
    {
      auto admission = store_->model().admit(length);
      rec.issue_time = admission.issued();
      rec.injected_delay = admission.injected_delay();
      data = file_.read_exact(offset, length);
      std::this_thread::sleep_until(admission.complete_at());
      rec.complete_time = Clock::now();
    }
    log_.append(rec);
    if (record) *record = rec;
    return data;
  }

  std::optional<std::uint64_t> size() const override { return file_.size(); }
  std::string describe() const override { return "sim://" + path_.string(); }

 private:
  std::shared_ptr<SimulatedStore> store_;
  std::filesystem::path path_;
  detail::FileHandle file_;
};

}  // namespace

std::shared_ptr<SimulatedStore> SimulatedStore::create(SourceProfile profile) {
  return std::shared_ptr<SimulatedStore>(new SimulatedStore(std::move(profile)));
}

std::unique_ptr<ByteSource> SimulatedStore::open(const std::filesystem::path& backing) {
  return std::make_unique<SimulatedSource>(shared_from_this(), backing);
}

std::unique_ptr<ByteSource> open_local(const std::filesystem::path& path) {
  return std::make_unique<LocalSource>(path);
}

std::unique_ptr<ByteSource> open_simulated(const std::filesystem::path& backing,
                                           SourceProfile profile) {
  return SimulatedStore::create(std::move(profile))->open(backing);
}

}  // namespace cogstream

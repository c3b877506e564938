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

// HTTP range client and the latency-injecting range server, both on
// cpp-httplib. Kept in one translation unit so the header is compiled once.

#include <httplib.h>

#include <atomic>
#include <charconv>
#include <thread>

#include "cogstream/byte_source.hpp"
#include "cogstream/error.hpp"
#include "file_handle.hpp"

namespace cogstream {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0) {
    throw Error(ErrorCode::InvalidArgument, "only http:// URLs are supported: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "URL has no object path: " + url);
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

// Parses "bytes first-last/total".
bool parse_content_range(const std::string& value, std::uint64_t& first, std::uint64_t& last,
                         std::optional<std::uint64_t>& total) {
  constexpr std::string_view prefix = "bytes ";
  if (value.rfind(prefix, 0) != 0) return false;
  const char* p = value.data() + prefix.size();
  const char* end = value.data() + value.size();
  auto r = std::from_chars(p, end, first);
  if (r.ec != std::errc{} || r.ptr == end || *r.ptr != '-') return false;
  r = std::from_chars(r.ptr + 1, end, last);
  if (r.ec != std::errc{} || r.ptr == end || *r.ptr != '/') return false;
  if (r.ptr + 1 < end && *(r.ptr + 1) == '*') {
    total.reset();
    return true;
  }
  std::uint64_t t = 0;
  r = std::from_chars(r.ptr + 1, end, t);
  if (r.ec != std::errc{}) return false;
  total = t;
  return true;
}

class RemoteSource : public ByteSource {
 public:
  RemoteSource(std::string url, RetryPolicy policy)
      : url_(std::move(url)), parsed_(parse_url(url_)), policy_(std::move(policy)) {
    if (policy_.max_attempts == 0) policy_.max_attempts = 1;
  }

  Bytes get_range(std::uint64_t offset, std::uint64_t length, RequestRecord* record) override {
    RequestRecord rec;
    rec.id = log_.next_id();
    rec.offset = offset;
    rec.length = length;
    rec.requested = rec.issue_time = Clock::now();
    if (length == 0) {
      rec.complete_time = rec.issue_time;
      log_.append(rec);
      if (record) *record = rec;
      return {};
    }

    enum class Failure { None, Timeout, Transport, ServerError };
    Failure last = Failure::None;
    int last_status = 0;
    std::string last_detail;

    for (std::uint32_t attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
      rec.attempts = attempt;
      httplib::Client client(parsed_.origin);
      client.set_keep_alive(false);
      client.set_connection_timeout(policy_.connect_timeout);
      client.set_read_timeout(policy_.read_timeout);
      const httplib::Headers headers{
          {"Range", "bytes=" + std::to_string(offset) + "-" + std::to_string(offset + length - 1)},
          {"Cache-Control", "no-cache"}};
      const auto sent = Clock::now();
      auto res = client.Get(parsed_.path, headers);

      if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                               (err == httplib::Error::Read &&
                                Clock::now() - sent >= policy_.read_timeout * 9 / 10);
        last = timed_out ? Failure::Timeout : Failure::Transport;
        last_detail = httplib::to_string(err);
      } else if (res->status == 206) {
        return finish(rec, record, *res, offset, length);
      } else if (res->status == 200) {
        fail(rec);
        throw Error(ErrorCode::ProtocolError,
                    describe() + " ignored the Range header (200 with full body)");
      } else if (res->status == 416) {
        fail(rec);
        throw Error(ErrorCode::RangeOutOfBounds, "416 for range of " + describe());
      } else if (res->status == 429 || res->status >= 500) {
        last = Failure::ServerError;
        last_status = res->status;
        last_detail = "HTTP " + std::to_string(res->status);
      } else {
        fail(rec);
        throw Error(ErrorCode::Http, "HTTP " + std::to_string(res->status) + " from " + describe(),
                    res->status);
      }

      if (attempt < policy_.max_attempts && !policy_.backoff.empty()) {
        const std::size_t i = std::min<std::size_t>(attempt - 1, policy_.backoff.size() - 1);
        std::this_thread::sleep_for(policy_.backoff[i]);
      }
    }

    fail(rec);
    if (last == Failure::Timeout) {
      throw Error(ErrorCode::Timeout, describe() + ": " + last_detail);
    }
    throw Error(ErrorCode::RetriesExhausted,
                describe() + " after " + std::to_string(rec.attempts) + " attempts: " + last_detail,
                last_status);
  }

  std::optional<std::uint64_t> size() const override {
    const auto v = size_.load();
    if (v == kUnknown) return std::nullopt;
    return v;
  }

  std::string describe() const override { return url_; }

 private:
  static constexpr std::uint64_t kUnknown = ~std::uint64_t{0};

  Bytes finish(RequestRecord& rec, RequestRecord* out, const httplib::Response& res,
               std::uint64_t offset, std::uint64_t length) {
    std::uint64_t first = 0;
    std::uint64_t last = 0;
    std::optional<std::uint64_t> total;
    if (!res.has_header("Content-Range") ||
        !parse_content_range(res.get_header_value("Content-Range"), first, last, total)) {
      fail(rec);
      throw Error(ErrorCode::ProtocolError, "206 without a valid Content-Range from " + describe());
    }
    if (first != offset || last + 1 != offset + length || res.body.size() != length) {
      fail(rec);
      throw Error(ErrorCode::ProtocolError, "206 body does not match the requested range");
    }
    if (total) size_.store(*total);
    rec.complete_time = Clock::now();
    log_.append(rec);
    if (out) *out = rec;
    const auto* p = reinterpret_cast<const std::uint8_t*>(res.body.data());
    return Bytes(p, p + res.body.size());
  }

  void fail(RequestRecord& rec) {
    rec.ok = false;
    rec.complete_time = Clock::now();
    log_.append(rec);
  }

  std::string url_;
  ParsedUrl parsed_;
  RetryPolicy policy_;
  std::atomic<std::uint64_t> size_{kUnknown};
};

}  // namespace

std::unique_ptr<ByteSource> open_remote(const std::string& url, RetryPolicy policy) {
  return std::make_unique<RemoteSource>(url, std::move(policy));
}

// --- RangeServer -------------------------------------------------------------

struct RangeServer::Impl {
  explicit Impl(Options o) : options(std::move(o)), model(options.profile) {}

  Options options;
  httplib::Server server;
  ServiceModel model;
  RequestLog log;
  std::thread listener;
  int port = -1;
  std::mutex mu;
  std::condition_variable cv;
  bool stopped = false;
};

namespace {

bool safe_relative(const std::string& rel) {
  if (rel.empty() || rel.front() == '/') return false;
  for (const auto& part : std::filesystem::path(rel)) {
    if (part == "..") return false;
  }
  return true;
}

}  // namespace

RangeServer::RangeServer(Options options) : impl_(std::make_unique<Impl>(std::move(options))) {
  Impl& impl = *impl_;
  if (!std::filesystem::is_directory(impl.options.root)) {
    throw Error(ErrorCode::NotFound, "serve root is not a directory: " +
                                         impl.options.root.string());
  }
  const int threads = std::max(1, impl.options.worker_threads);
  impl.server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  // httplib's default sets SO_REUSEPORT, which lets a second server silently
  // share a busy port. Plain SO_REUSEADDR keeps "port taken" a bind error.
  impl.server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });

  impl.server.Get(R"(/(.+))", [&impl](const httplib::Request& req, httplib::Response& res) {
    const std::string rel = req.matches[1];
    if (!safe_relative(rel)) {
      res.status = 400;
      return;
    }
    const auto path = impl.options.root / rel;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
      res.status = 404;
      return;
    }
    auto file = std::make_shared<detail::FileHandle>(detail::FileHandle::open_read(path));
    const std::uint64_t size = file->size();

    RequestRecord rec;
    rec.id = impl.log.next_id();
    rec.requested = Clock::now();
    rec.offset = 0;
    rec.length = size;
    if (req.ranges.size() == 1) {
      auto [first, last] = req.ranges[0];
      if (first < 0 && last >= 0) {  // suffix range
        first = static_cast<ssize_t>(size) - last;
        last = static_cast<ssize_t>(size) - 1;
      } else if (last < 0) {
        last = static_cast<ssize_t>(size) - 1;
      }
      if (first >= 0 && first <= last && static_cast<std::uint64_t>(last) < size) {
        rec.offset = static_cast<std::uint64_t>(first);
        rec.length = static_cast<std::uint64_t>(last - first + 1);
      } else {
        rec.length = 0;
      }
    }
    {
      auto admission = impl.model.admit(rec.length);
      rec.issue_time = admission.issued();
      rec.injected_delay = admission.injected_delay();
      std::this_thread::sleep_until(admission.complete_at());
    }
    rec.complete_time = Clock::now();
    impl.log.append(rec);

    res.set_header("Cache-Control", "no-store, no-cache, must-revalidate");
    res.set_header("Pragma", "no-cache");
    res.set_header("Accept-Ranges", "bytes");
    res.set_content_provider(
        static_cast<std::size_t>(size), "application/octet-stream",
        [file](std::size_t offset, std::size_t length, httplib::DataSink& sink) {
          const std::size_t chunk = std::min<std::size_t>(length, std::size_t{1} << 20);
          const Bytes data = file->read_exact(offset, chunk);
          return sink.write(reinterpret_cast<const char*>(data.data()), data.size());
        });
  });

  if (impl.options.port == 0) {
    impl.port = impl.server.bind_to_any_port(impl.options.bind_address);
  } else {
    impl.port = impl.server.bind_to_port(impl.options.bind_address, impl.options.port)
                    ? impl.options.port
                    : -1;
  }
  if (impl.port < 0) {
    throw Error(ErrorCode::BindFailure, "cannot bind " + impl.options.bind_address + ":" +
                                            std::to_string(impl.options.port));
  }
  impl.listener = std::thread([&impl] {
    impl.server.listen_after_bind();
    {
      std::lock_guard lock(impl.mu);
      impl.stopped = true;
    }
    impl.cv.notify_all();
  });
  impl.server.wait_until_ready();
}

RangeServer::~RangeServer() { stop(); }

int RangeServer::port() const noexcept { return impl_->port; }

std::string RangeServer::base_url() const {
  return "http://" + impl_->options.bind_address + ":" + std::to_string(impl_->port);
}

const RequestLog& RangeServer::log() const noexcept { return impl_->log; }

void RangeServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopped; });
}

void RangeServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->listener.joinable() && impl_->listener.get_id() != std::this_thread::get_id()) {
    impl_->listener.join();
  }
}

std::unique_ptr<RangeServer> serve(const std::filesystem::path& root, SourceProfile profile,
                                   const std::string& bind_address, int port) {
  RangeServer::Options options;
  options.root = root;
  options.profile = std::move(profile);
  options.bind_address = bind_address;
  options.port = port;
  return std::make_unique<RangeServer>(std::move(options));
}

}  // namespace cogstream

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

#include <gtest/gtest.h>
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <thread>

#include "cogstream/byte_source.hpp"
#include "cogstream/cog.hpp"
#include "test_support.hpp"

namespace cogstream {
namespace {

using namespace std::chrono_literals;
using testing::TempDir;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Bytes counting_bytes(std::size_t n) {
  Bytes b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(i * 13 + 1);
  return b;
}

// Largest number of records whose [issue, complete) intervals overlap.
std::size_t max_overlap(const std::vector<RequestRecord>& log) {
  std::vector<std::pair<Clock::time_point, int>> events;
  for (const auto& r : log) {
    events.emplace_back(r.issue_time, +1);
    events.emplace_back(r.complete_time, -1);
  }
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second < b.second;  // ends first
  });
  int cur = 0, best = 0;
  for (const auto& [t, d] : events) best = std::max(best, cur += d);
  return static_cast<std::size_t>(best);
}

class ByteSourceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = counting_bytes(100000);
    testing::write_file(dir_ / "blob.bin", data_);
    const Raster r = generate_synthetic_scene(64, 64, 1, 1, 0.5);
    testing::write_file(dir_ / "scene.tif", write_cog(r, CompressionScheme::none(), {.tile_size = 32}));
  }
  TempDir dir_;
  Bytes data_;
};

TEST_F(ByteSourceTest, LocalReadsMagicAndBounds) {
  auto src = open_local(dir_ / "scene.tif");
  const Bytes head = src->get_range(0, 8);
  EXPECT_EQ(head[0], 'I');
  EXPECT_EQ(head[2], 42);
  EXPECT_COG_ERROR(src->get_range(*src->size() - 2, 4), ErrorCode::RangeOutOfBounds);
  EXPECT_COG_ERROR(open_local(dir_ / "missing.tif"), ErrorCode::NotFound);
}

TEST_F(ByteSourceTest, LocalHandlesAreIndependent) {
  auto a = open_local(dir_ / "blob.bin");
  auto b = open_local(dir_ / "blob.bin");
  EXPECT_EQ(a->get_range(500, 10), Bytes(data_.begin() + 500, data_.begin() + 510));
  EXPECT_EQ(b->get_range(0, 10), Bytes(data_.begin(), data_.begin() + 10));
  EXPECT_EQ(a->get_range(0, 10), b->get_range(0, 10));
  EXPECT_EQ(a->log().size(), 2u);
  EXPECT_EQ(b->log().size(), 2u);
}

TEST_F(ByteSourceTest, SimulatedSequentialLatencyAdds) {
  SourceProfile p{.per_request_latency_ms = 100};
  auto src = open_simulated(dir_ / "blob.bin", p);
  const auto t0 = Clock::now();
  for (int i = 0; i < 10; ++i) src->get_range(static_cast<std::uint64_t>(i), 1);
  EXPECT_GE(seconds_since(t0), 1.0);
  for (const auto& r : src->log().snapshot()) {
    EXPECT_GE(r.complete_time - r.issue_time, 100ms);
  }
}

TEST_F(ByteSourceTest, SimulatedParallelLatencyOverlaps) {
  SourceProfile p{.per_request_latency_ms = 100, .max_concurrent_requests = 10};
  auto src = open_simulated(dir_ / "blob.bin", p);
  const auto t0 = Clock::now();
  std::vector<std::thread> threads;
  for (int i = 0; i < 10; ++i) {
    threads.emplace_back([&, i] { src->get_range(static_cast<std::uint64_t>(i) * 10, 10); });
  }
  for (auto& t : threads) t.join();
  EXPECT_LT(seconds_since(t0), 0.25);
}

TEST_F(ByteSourceTest, ConcurrencyCeilingQueuesFifo) {
  SourceProfile p{.per_request_latency_ms = 100, .max_concurrent_requests = 2};
  auto store = SimulatedStore::create(p);
  auto a = store->open(dir_ / "blob.bin");
  auto b = store->open(dir_ / "blob.bin");
  const auto t0 = Clock::now();
  std::vector<std::thread> threads;
  for (int i = 0; i < 10; ++i) {
    threads.emplace_back([&, i] { (i % 2 ? a : b)->get_range(0, 1); });
  }
  for (auto& t : threads) t.join();
  EXPECT_GE(seconds_since(t0), 0.5);
  auto log = a->log().snapshot();
  const auto lb = b->log().snapshot();
  log.insert(log.end(), lb.begin(), lb.end());
  ASSERT_EQ(log.size(), 10u);
  EXPECT_LE(max_overlap(log), 2u);
  EXPECT_LE(store->model().peak_in_flight(), 2u);
}

TEST_F(ByteSourceTest, BandwidthCapShapesTransfer) {
  SourceProfile p{.per_request_latency_ms = 0, .bandwidth_bytes_per_s = 1e6};
  auto src = open_simulated(dir_ / "blob.bin", p);
  const auto t0 = Clock::now();
  src->get_range(0, 50000);
  src->get_range(0, 50000);
  EXPECT_GE(seconds_since(t0), 0.1);
}

TEST_F(ByteSourceTest, SimulatedJitterReplaysWithSeed) {
  const auto delays = [&](std::uint64_t seed) {
    SourceProfile p{.per_request_latency_ms = 5, .latency_jitter_ms = 20, .seed = seed};
    auto src = open_simulated(dir_ / "blob.bin", p);
    std::vector<std::chrono::nanoseconds> out;
    for (int i = 0; i < 8; ++i) {
      RequestRecord rec;
      src->get_range(0, 4, &rec);
      out.push_back(rec.injected_delay);
    }
    return out;
  };
  const auto a = delays(7);
  EXPECT_EQ(a, delays(7));
  EXPECT_NE(a, delays(8));
  for (auto d : a) {
    EXPECT_GE(d, 5ms);
    EXPECT_LE(d, 25ms + 1ms);
  }
}

TEST_F(ByteSourceTest, NoCacheEveryCallIsARequest) {
  auto sim = open_simulated(dir_ / "blob.bin", SourceProfile{.per_request_latency_ms = 1});
  for (int i = 0; i < 5; ++i) sim->get_range(10, 10);
  EXPECT_EQ(sim->log().size(), 5u);
}

TEST_F(ByteSourceTest, ProfileValidation) {
  EXPECT_COG_ERROR((SourceProfile{.per_request_latency_ms = -1}.validate()),
                   ErrorCode::InvalidArgument);
  EXPECT_COG_ERROR((SourceProfile{.bandwidth_bytes_per_s = -5}.validate()),
                   ErrorCode::InvalidArgument);
  EXPECT_NO_THROW(SourceProfile::paper().validate());
  EXPECT_DOUBLE_EQ(SourceProfile::paper().per_request_latency_ms, 164.0);
}

// --- HTTP --------------------------------------------------------------------

TEST_F(ByteSourceTest, ServerHonoursRangesAndDisablesCaching) {
  RangeServer server({.root = dir_.path(), .profile = SourceProfile{.per_request_latency_ms = 0}});
  httplib::Client client("127.0.0.1", server.port());
  auto full = client.Get("/blob.bin");
  ASSERT_TRUE(full);
  EXPECT_EQ(full->status, 200);
  EXPECT_EQ(full->body.size(), data_.size());

  auto part = client.Get("/blob.bin", {{"Range", "bytes=4-7"}});
  ASSERT_TRUE(part);
  EXPECT_EQ(part->status, 206);
  EXPECT_EQ(part->body.size(), 4u);
  EXPECT_EQ(part->get_header_value("Content-Range"), "bytes 4-7/100000");
  EXPECT_EQ(static_cast<std::uint8_t>(part->body[0]), data_[4]);
  EXPECT_NE(part->get_header_value("Cache-Control").find("no-store"), std::string::npos);

  auto beyond = client.Get("/blob.bin", {{"Range", "bytes=200000-200010"}});
  ASSERT_TRUE(beyond);
  EXPECT_EQ(beyond->status, 416);

  auto missing = client.Get("/nope.bin");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
}

TEST_F(ByteSourceTest, RemoteRangeReadThroughServer) {
  RangeServer server({.root = dir_.path(), .profile = SourceProfile{.per_request_latency_ms = 50}});
  auto src = open_remote(server.base_url() + "/blob.bin");
  EXPECT_EQ(src->get_range(0, 8), Bytes(data_.begin(), data_.begin() + 8));
  EXPECT_EQ(src->size(), data_.size());
  EXPECT_EQ(src->get_range(99990, 10), Bytes(data_.end() - 10, data_.end()));
  EXPECT_COG_ERROR(src->get_range(99995, 10), ErrorCode::RangeOutOfBounds);
  for (const auto& r : src->log().snapshot()) {
    if (r.ok) EXPECT_GE(r.complete_time - r.issue_time, 50ms);
  }
  EXPECT_GE(server.log().size(), 3u);
  for (const auto& r : server.log().snapshot()) {
    if (r.ok) EXPECT_GE(r.injected_delay, 50ms);
  }
}

TEST_F(ByteSourceTest, RemoteParsesCogOverHttp) {
  RangeServer server({.root = dir_.path(), .profile = SourceProfile{.per_request_latency_ms = 0}});
  auto remote = open_remote(server.base_url() + "/scene.tif");
  auto local = open_local(dir_ / "scene.tif");
  EXPECT_EQ(parse_cog(*remote), parse_cog(*local));
  EXPECT_EQ(read_raster(*remote), read_raster(*local));
}

TEST_F(ByteSourceTest, RemoteNoCacheEveryCallIsARequest) {
  RangeServer server({.root = dir_.path(), .profile = SourceProfile{.per_request_latency_ms = 0}});
  auto src = open_remote(server.base_url() + "/blob.bin");
  for (int i = 0; i < 5; ++i) src->get_range(10, 10);
  EXPECT_EQ(src->log().size(), 5u);
  EXPECT_EQ(server.log().size(), 5u);
}

// A scripted server for failure paths.
class ScriptedServer {
 public:
  explicit ScriptedServer(std::function<void(int, const httplib::Request&, httplib::Response&)> h)
      : handler_(std::move(h)) {
    server_.Get("/.*", [this](const httplib::Request& req, httplib::Response& res) {
      handler_(++calls_, req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ScriptedServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/obj"; }
  int calls() const { return calls_; }

 private:
  httplib::Server server_;
  std::function<void(int, const httplib::Request&, httplib::Response&)> handler_;
  std::atomic<int> calls_{0};
  int port_ = 0;
  std::thread thread_;
};

void reply_partial(const httplib::Request& req, httplib::Response& res, const Bytes& body) {
  const auto range = req.get_header_value("Range");
  std::uint64_t a = 0, b = 0;
  ASSERT_EQ(std::sscanf(range.c_str(), "bytes=%lu-%lu", &a, &b), 2);
  res.status = 206;
  res.set_header("Content-Range", "bytes " + std::to_string(a) + "-" + std::to_string(b) + "/" +
                                      std::to_string(body.size()));
  res.body.assign(body.begin() + static_cast<std::ptrdiff_t>(a),
                  body.begin() + static_cast<std::ptrdiff_t>(b + 1));
}

TEST_F(ByteSourceTest, RetriesTransientServerErrors) {
  ScriptedServer server([&](int call, const httplib::Request& req, httplib::Response& res) {
    if (call <= 2) {
      res.status = 500;
    } else {
      reply_partial(req, res, data_);
    }
  });
  auto src = open_remote(server.url());
  RequestRecord rec;
  EXPECT_EQ(src->get_range(0, 8, &rec), Bytes(data_.begin(), data_.begin() + 8));
  EXPECT_EQ(rec.attempts, 3u);
  EXPECT_EQ(server.calls(), 3);
  ASSERT_EQ(src->log().size(), 1u);
  EXPECT_EQ(src->log().snapshot()[0].attempts, 3u);
}

TEST_F(ByteSourceTest, RetriesAreBounded) {
  ScriptedServer server([](int, const httplib::Request&, httplib::Response& res) { res.status = 503; });
  RetryPolicy policy;
  policy.backoff = {10ms, 20ms, 40ms};
  auto src = open_remote(server.url(), policy);
  try {
    src->get_range(0, 8);
    ADD_FAILURE() << "expected RetriesExhausted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RetriesExhausted);
    EXPECT_EQ(e.http_status(), 503);
  }
  EXPECT_EQ(server.calls(), 4);
}

TEST_F(ByteSourceTest, ClientErrorsAreNotRetried) {
  ScriptedServer server([](int, const httplib::Request&, httplib::Response& res) { res.status = 403; });
  auto src = open_remote(server.url());
  try {
    src->get_range(0, 8);
    ADD_FAILURE() << "expected Http";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Http);
    EXPECT_EQ(e.http_status(), 403);
  }
  EXPECT_EQ(server.calls(), 1);
}

TEST_F(ByteSourceTest, FullBodyWithoutRangeSupportIsProtocolError) {
  ScriptedServer server([&](int, const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.body.assign(data_.begin(), data_.end());
  });
  auto src = open_remote(server.url());
  EXPECT_COG_ERROR(src->get_range(0, 8), ErrorCode::ProtocolError);
}

TEST_F(ByteSourceTest, SlowServerTimesOut) {
  ScriptedServer server([&](int, const httplib::Request& req, httplib::Response& res) {
    std::this_thread::sleep_for(600ms);
    reply_partial(req, res, data_);
  });
  RetryPolicy policy;
  policy.max_attempts = 2;
  policy.backoff = {10ms};
  policy.read_timeout = 150ms;
  auto src = open_remote(server.url(), policy);
  EXPECT_COG_ERROR(src->get_range(0, 8), ErrorCode::Timeout);
}

TEST_F(ByteSourceTest, BindFailureWhenPortTaken) {
  RangeServer first({.root = dir_.path()});
  EXPECT_COG_ERROR(serve(dir_.path(), SourceProfile::desk(), "127.0.0.1", first.port()),
                   ErrorCode::BindFailure);
}

TEST_F(ByteSourceTest, ServerRejectsPathEscapes) {
  RangeServer server({.root = dir_.path()});
  httplib::Client client("127.0.0.1", server.port());
  auto res = client.Get("/../etc/passwd");
  ASSERT_TRUE(res);
  EXPECT_NE(res->status, 200);
  EXPECT_NE(res->status, 206);
}

}  // namespace
}  // namespace cogstream

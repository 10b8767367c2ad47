#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

#include "hermes/costmodel.hpp"
#include "hermes/protocol/source.hpp"

namespace hermes::node {

struct MetricsSnapshot {
  std::uint64_t bytes_sent = 0;          // every frame byte written
  std::uint64_t payload_bytes_sent = 0;  // data payloads minus repeated identifiers
  std::uint64_t echo_bytes_sent = 0;
  std::uint64_t framing_bytes_sent = 0;  // headers, CONFIG, CLOSE
  std::uint64_t bytes_received = 0;
  std::uint64_t chunks_processed = 0;
  std::uint64_t store_hits = 0;
  std::uint64_t store_misses = 0;
  std::uint64_t bases_sent = 0;
  std::uint64_t collisions = 0;  // chunks sent verbatim after a fingerprint clash
  std::uint64_t sessions = 0;
  double seconds = 0;

  double throughput() const noexcept {
    const auto moved = std::max(bytes_sent, bytes_received);
    return seconds > 0 ? static_cast<double>(moved) / seconds : 0.0;
  }
};

inline constexpr const char* kMetricsCsvHeader =
    "bytes_sent,payload_bytes_sent,echo_bytes_sent,framing_bytes_sent,bytes_received,chunks_processed,store_hits,"
    "store_misses,bases_sent,collisions,sessions,seconds,throughput_bps";

inline std::string to_csv_row(const MetricsSnapshot& m) {
  return std::to_string(m.bytes_sent) + ',' + std::to_string(m.payload_bytes_sent) + ',' +
         std::to_string(m.echo_bytes_sent) + ',' + std::to_string(m.framing_bytes_sent) + ',' +
         std::to_string(m.bytes_received) + ',' + std::to_string(m.chunks_processed) + ',' +
         std::to_string(m.store_hits) + ',' + std::to_string(m.store_misses) + ',' + std::to_string(m.bases_sent) +
         ',' + std::to_string(m.collisions) + ',' + std::to_string(m.sessions) + ',' + costmodel::format_ratio(m.seconds) + ',' +
         costmodel::format_ratio(m.throughput());
}

inline std::string to_csv(const MetricsSnapshot& m) { return std::string(kMetricsCsvHeader) + '\n' + to_csv_row(m) + '\n'; }

inline std::string to_json_line(const MetricsSnapshot& m) {
  const nlohmann::json j = {{"bytes_sent", m.bytes_sent},
                            {"payload_bytes_sent", m.payload_bytes_sent},
                            {"echo_bytes_sent", m.echo_bytes_sent},
                            {"framing_bytes_sent", m.framing_bytes_sent},
                            {"bytes_received", m.bytes_received},
                            {"chunks_processed", m.chunks_processed},
                            {"store_hits", m.store_hits},
                            {"store_misses", m.store_misses},
                            {"bases_sent", m.bases_sent},
                            {"collisions", m.collisions},
                            {"sessions", m.sessions},
                            {"seconds", m.seconds},
                            {"throughput_bps", m.throughput()}};
  return j.dump() + '\n';
}

// Counters shared by every session thread of a node.
class Metrics {
 public:
  Metrics() : start_(std::chrono::steady_clock::now()) {}

  void add_link(const protocol::LinkStats& now, protocol::LinkStats& seen) {
    bytes_sent_ += now.wire_bytes() - seen.wire_bytes();
    payload_ += now.content_bytes() - seen.content_bytes();
    echo_ += now.echo_bytes - seen.echo_bytes;
    framing_ += now.framing_bytes() - seen.framing_bytes();
    seen = now;
  }

  void add_counters(const protocol::ChunkCounters& now, protocol::ChunkCounters& seen) {
    chunks_ += now.chunks - seen.chunks;
    hits_ += now.hits - seen.hits;
    misses_ += now.misses - seen.misses;
    collisions_ += now.collisions - seen.collisions;
    seen = now;
  }

  void add_bases_sent(std::uint64_t n) { bases_sent_ += n; }
  void add_sent(std::uint64_t n) { bytes_sent_ += n; }
  void add_received(std::uint64_t n) { bytes_received_ += n; }
  void add_session() { ++sessions_; }

  MetricsSnapshot snapshot() const {
    MetricsSnapshot s;
    s.bytes_sent = bytes_sent_;
    s.payload_bytes_sent = payload_;
    s.echo_bytes_sent = echo_;
    s.framing_bytes_sent = framing_;
    s.bytes_received = bytes_received_;
    s.chunks_processed = chunks_;
    s.store_hits = hits_;
    s.store_misses = misses_;
    s.bases_sent = bases_sent_;
    s.collisions = collisions_;
    s.sessions = sessions_;
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
  std::atomic<std::uint64_t> bytes_sent_{0}, payload_{0}, echo_{0}, framing_{0}, bytes_received_{0};
  std::atomic<std::uint64_t> chunks_{0}, hits_{0}, misses_{0}, bases_sent_{0}, collisions_{0}, sessions_{0};
};

}  // namespace hermes::node

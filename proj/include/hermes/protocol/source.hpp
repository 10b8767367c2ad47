#pragma once

#include <map>
#include <unordered_map>

#include "hermes/engine/codec.hpp"
#include "hermes/protocol/payload.hpp"
#include "hermes/protocol/session_config.hpp"

namespace hermes::protocol {

inline constexpr std::size_t kDefaultWindow = 64;

// Bytes a sender put on one link. `content_bytes` is what the cost equations
// count: data message payloads minus the identifiers a *_DATA repeats.
struct LinkStats {
  std::uint64_t frames = 0;
  std::uint64_t header_bytes = 0;
  std::uint64_t control_bytes = 0;  // CONFIG and CLOSE payloads
  std::uint64_t payload_bytes = 0;  // DATA, DEDUP*, GEN_DEDUP* payloads
  std::uint64_t echo_bytes = 0;
  std::uint64_t response_frames = 0;
  std::uint64_t response_bytes = 0;  // whole frames received back
  std::map<MsgType, std::uint64_t> sent_by_type;

  std::uint64_t content_bytes() const noexcept { return payload_bytes - echo_bytes; }
  std::uint64_t framing_bytes() const noexcept { return header_bytes + control_bytes; }
  std::uint64_t wire_bytes() const noexcept { return header_bytes + control_bytes + payload_bytes; }

  void sent(const Message& m, std::size_t echo = 0) {
    ++frames;
    ++sent_by_type[m.type];
    header_bytes += kFrameHeaderBytes;
    if (m.type == MsgType::config || m.type == MsgType::close) {
      control_bytes += m.payload.size();
    } else {
      payload_bytes += m.payload.size();
      echo_bytes += echo;
    }
  }

  void received(const Message& m) {
    ++response_frames;
    response_bytes += kFrameHeaderBytes + m.payload.size();
  }
};

struct ChunkCounters {
  std::uint64_t chunks = 0;
  std::uint64_t hits = 0;      // settled without sending a payload
  std::uint64_t misses = 0;    // the peer asked for more
  std::uint64_t payloads = 0;  // bases or chunks sent / received
  std::uint64_t collisions = 0;  // chunks sent as DATA because a truncated fingerprint was taken
};

// Sending half of a session. Chunks are announced optimistically; payloads
// are kept only until the peer acknowledges them.
class SourceSession {
 public:
  SourceSession(NodeClass cls, engine::EngineConfig cfg, std::size_t window = kDefaultWindow)
      : cls_(cls), codec_(std::move(cfg)), window_(window == 0 ? 1 : window) {
    if (cls_ != NodeClass::basic) check_class_scheme(cls_, codec_.scheme());
  }

  const engine::ChunkCodec& codec() const noexcept { return codec_; }
  const LinkStats& stats() const noexcept { return stats_; }
  const ChunkCounters& counters() const noexcept { return counters_; }
  NodeClass node_class() const noexcept { return cls_; }

  Message start() {
    Message m = config_message(codec_.config());
    stats_.sent(m);
    return m;
  }

  bool ready() const noexcept { return configured_; }
  bool can_send() const noexcept { return configured_ && close_seq_ == 0 && outstanding_.size() < window_; }
  bool drained() const noexcept { return outstanding_.empty(); }
  bool done() const noexcept { return closed_; }
  std::size_t in_flight() const noexcept { return outstanding_.size(); }

  // Announces one chunk. DATA carries it verbatim for basic nodes, and for
  // chunks whose truncated fingerprint already stands for other content.
  Message send_chunk(ByteView chunk) {
    if (!can_send()) throw ProtocolError("send window is full");
    const std::uint32_t seq = next_seq_++;
    ++counters_.chunks;
    Message m;
    std::optional<engine::Split> s;
    if (cls_ != NodeClass::basic) {
      s = codec_.split(chunk);
      if (!claim_fingerprints(*s)) {
        s.reset();
        ++counters_.collisions;
      }
    }
    if (s) {
      m = first_message(codec_, *s, seq);
      outstanding_.emplace(seq, Outstanding{std::move(*s), false, false});
    } else {
      m = Message{MsgType::data, Status::ack, seq, Bytes(chunk.begin(), chunk.end())};
      outstanding_.emplace(seq, Outstanding{{}, true, false});
      ++counters_.payloads;
    }
    stats_.sent(m);
    return m;
  }

  std::vector<Message> on_response(const Message& r) {
    if (r.type != MsgType::response) throw ProtocolError("expected a response, got " + to_string(r.type));
    stats_.received(r);
    if (r.status == Status::error) {
      throw ProtocolError("peer reported an error for seq " + std::to_string(r.seq) + ": " +
                          std::string(r.payload.begin(), r.payload.end()));
    }
    if (r.seq == 0 && !configured_) {
      if (r.status != Status::ack) throw ProtocolError("unexpected answer to CONFIG");
      configured_ = true;
      return {};
    }
    if (close_seq_ != 0 && r.seq == close_seq_) {
      if (r.status != Status::ack) throw ProtocolError("unexpected answer to CLOSE");
      closed_ = true;
      return {};
    }
    const auto it = outstanding_.find(r.seq);
    if (it == outstanding_.end()) throw ProtocolError("response for unknown seq " + std::to_string(r.seq));
    if (r.status == Status::ack) {
      if (it->second.verbatim) ++counters_.misses;
      else if (!it->second.requested) ++counters_.hits;
      outstanding_.erase(it);
      return {};
    }
    if (it->second.verbatim || it->second.requested || !expected_request(r.status)) {
      throw ProtocolError("unexpected " + to_string(r.status) + " for seq " + std::to_string(r.seq));
    }
    it->second.requested = true;
    ++counters_.misses;
    ++counters_.payloads;
    auto d = data_message(codec_, it->second.split, r.status, r.seq);
    stats_.sent(d.message, d.echo_bytes);
    return {std::move(d.message)};
  }

  Message finish(std::uint64_t total_length) {
    if (!drained()) throw ProtocolError("cannot close with messages in flight");
    close_seq_ = next_seq_++;
    Message m = close_message(close_seq_, total_length);
    stats_.sent(m);
    return m;
  }

 private:
  struct Outstanding {
    engine::Split split;
    bool verbatim = false;  // sent as DATA
    bool requested = false;
  };

  bool expected_request(Status s) const {
    if (codec_.scheme() == Scheme::gd_dual) return s == Status::deviation_request || s == Status::chunk_request;
    return s == Status::new_fingerprint;
  }

  // A truncated fingerprint standing for two different payloads would make
  // the sink rebuild the wrong data. Records the chunk's fingerprints unless
  // one of them is already taken by other content.
  bool claim_fingerprints(const engine::Split& s) {
    if (codec_.scheme() == Scheme::gd_dual) {
      if (taken(chunk_digests_, s.ids.primary, s.chunk_digest) || taken(basis_digests_, *s.ids.secondary, s.basis_digest)) {
        return false;
      }
      chunk_digests_.try_emplace(key_of(s.ids.primary), s.chunk_digest);
      basis_digests_.try_emplace(key_of(*s.ids.secondary), s.basis_digest);
      return true;
    }
    const Bytes& full = codec_.is_gd() ? s.basis_digest : s.chunk_digest;
    if (taken(chunk_digests_, s.ids.primary, full)) return false;
    chunk_digests_.try_emplace(key_of(s.ids.primary), full);
    return true;
  }

  static bool taken(const std::unordered_map<std::string, Bytes>& seen, const Bytes& fp, const Bytes& full) {
    const auto it = seen.find(key_of(fp));
    return it != seen.end() && it->second != full;
  }

  NodeClass cls_;
  engine::ChunkCodec codec_;
  std::size_t window_;
  bool configured_ = false;
  bool closed_ = false;
  std::uint32_t next_seq_ = 1;
  std::uint32_t close_seq_ = 0;
  std::map<std::uint32_t, Outstanding> outstanding_;
  std::unordered_map<std::string, Bytes> chunk_digests_;
  std::unordered_map<std::string, Bytes> basis_digests_;
  LinkStats stats_;
  ChunkCounters counters_;
};

}  // namespace hermes::protocol

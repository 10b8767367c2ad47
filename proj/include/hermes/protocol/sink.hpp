#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>

#include "hermes/engine/engine.hpp"
#include "hermes/protocol/payload.hpp"
#include "hermes/protocol/session_config.hpp"
#include "hermes/protocol/source.hpp"

namespace hermes::protocol {

// State every receiving session of one node shares.
struct SinkContext {
  NodeClass cls;
  engine::EngineConfig config;
  engine::SinkStores stores;
  std::atomic<std::uint64_t> next_owner{1};

  SinkContext(NodeClass c, engine::EngineConfig cfg)
      : cls(c), config(std::move(cfg)), stores(engine::SinkStores::create(engine::ChunkCodec(config))) {
    if (cls != NodeClass::basic) check_class_scheme(cls, config.scheme);
  }

  std::uint64_t generation() const {
    return stores.primary->generation() + (stores.basis ? stores.basis->generation() : 0);
  }
};

inline constexpr int kMaxValidationFailures = 2;

// Receiving half of a session, as a step function: each incoming frame
// yields the frames to send back. Reconstructed bytes are handed to `out`
// in stream order.
//
// A chunk whose payload another request is already fetching (from this or
// any other session) is parked until that payload is bound; poll() answers
// parked chunks once the stores have moved on.
class SinkSession {
 public:
  using Output = std::function<void(ByteView)>;

  SinkSession(std::shared_ptr<SinkContext> ctx, Output out, bool auto_ack_close = true)
      : ctx_(std::move(ctx)),
        state_(ctx_->config, ctx_->stores),
        out_(std::move(out)),
        owner_(ctx_->next_owner.fetch_add(1)),
        auto_ack_close_(auto_ack_close) {}

  SinkSession(const SinkSession&) = delete;
  SinkSession& operator=(const SinkSession&) = delete;
  ~SinkSession() { release_claims(); }

  const ChunkCounters& counters() const noexcept { return counters_; }
  std::uint64_t bytes_received() const noexcept { return bytes_received_; }
  bool has_parked() const noexcept { return !parked_.empty(); }
  bool should_disconnect() const noexcept { return disconnect_; }
  bool closing() const noexcept { return close_seq_ != 0; }
  bool finished() const noexcept { return finished_; }
  int failures() const noexcept { return failures_; }
  const std::string& last_error() const noexcept { return last_error_; }
  std::uint64_t stream_length() const noexcept { return emitted_; }

  std::vector<Message> handle(const Message& in) {
    bytes_received_ += kFrameHeaderBytes + in.payload.size();
    std::vector<Message> replies;
    if (disconnect_ || finished_) return replies;
    if (!configured_) {
      replies.push_back(handshake(in));
      return replies;
    }
    try {
      dispatch(in, replies);
    } catch (const FrameError&) {
      throw;
    } catch (const Error& e) {
      fail(in.seq, e.what(), replies);
    }
    resolve_parked(replies);
    return replies;
  }

  // Answers parked chunks whose payload has since been bound or abandoned.
  std::vector<Message> poll() {
    std::vector<Message> replies;
    if (!disconnect_) resolve_parked(replies);
    return replies;
  }

  // For intermediates: acknowledges CLOSE once the stream has been passed on.
  Message acknowledge_close() {
    if (close_seq_ == 0 || finished_) throw ProtocolError("no CLOSE to acknowledge");
    finished_ = true;
    return response(close_seq_, Status::ack);
  }

  void release_claims() {
    ctx_->stores.primary->release_all(owner_);
    if (ctx_->stores.basis) ctx_->stores.basis->release_all(owner_);
  }

 private:
  struct Awaiting {
    SchemeIdentifiers ids;
    Status asked;
    engine::FingerprintStore* store;
    Bytes key;
  };

  Message handshake(const Message& in) {
    if (in.type != MsgType::config || in.seq != 0) {
      disconnect_ = true;
      last_error_ = "expected CONFIG first";
      return response(in.seq, Status::error, last_error_);
    }
    try {
      const auto theirs = decode_config(in.payload);
      if (!(theirs == ctx_->config)) {
        throw ProtocolError("configuration mismatch: peer " + engine::describe(theirs) + ", local " +
                            engine::describe(ctx_->config));
      }
    } catch (const Error& e) {
      disconnect_ = true;
      last_error_ = e.what();
      return response(0, Status::error, last_error_);
    }
    configured_ = true;
    return response(0, Status::ack);
  }

  void dispatch(const Message& in, std::vector<Message>& replies) {
    if (in.type == MsgType::response || in.type == MsgType::config) {
      throw ProtocolError("unexpected " + to_string(in.type));
    }
    if (close_seq_ != 0) throw ProtocolError("message after CLOSE");
    if (in.type == MsgType::close) {
      close(in, replies);
      return;
    }
    if (!may_receive(ctx_->cls, in.type)) {
      throw ProtocolError(to_string(ctx_->cls) + " nodes do not accept " + to_string(in.type));
    }
    if (in.type == MsgType::dedup_data || in.type == MsgType::gen_dedup_data) {
      complete_request(in, replies);
      return;
    }
    if (in.seq != last_seq_ + 1) throw ProtocolError("seq " + std::to_string(in.seq) + " out of order");
    last_seq_ = in.seq;
    ++counters_.chunks;
    if (in.type == MsgType::data) {
      ++counters_.misses;
      ++counters_.payloads;
      emit(in.seq, Bytes(in.payload));
      replies.push_back(response(in.seq, Status::ack));
      return;
    }
    const engine::ChunkCodec& codec = state_.codec();
    auto ids = parse_first(codec, in.payload);
    if (auto r = try_resolve(in.seq, ids)) {
      replies.push_back(std::move(*r));
    } else {
      parked_.emplace(in.seq, std::move(ids));
    }
  }

  // ACK if the chunk can be rebuilt now, a request if this session should
  // fetch the missing part, nothing if another request is already fetching it.
  std::optional<Message> try_resolve(std::uint32_t seq, const SchemeIdentifiers& ids) {
    const auto& stores = ctx_->stores;
    const bool dual = state_.codec().scheme() == Scheme::gd_dual;
    for (;;) {
      const auto probe = state_.probe(ids);
      if (probe == engine::Probe::known) {
        SchemeIdentifiers settled = ids;
        if (dual) settled.deviation.reset();
        emit(seq, state_.complete(settled, std::nullopt));
        ++counters_.hits;
        return response(seq, Status::ack);
      }
      engine::FingerprintStore* store;
      Bytes key;
      Status ask;
      if (probe == engine::Probe::need_deviation) {
        store = stores.primary.get();
        key = ids.primary;
        ask = Status::deviation_request;
      } else if (dual) {
        store = stores.basis.get();
        key = *ids.secondary;
        ask = Status::chunk_request;
      } else {
        store = stores.primary.get();
        key = ids.primary;
        ask = Status::new_fingerprint;
      }
      switch (store->claim(key, owner_)) {
        case engine::ClaimResult::bound:
          continue;
        case engine::ClaimResult::pending:
          return std::nullopt;
        case engine::ClaimResult::claimed:
          ++counters_.misses;
          awaiting_.emplace(seq, Awaiting{ids, ask, store, std::move(key)});
          return response(seq, ask);
      }
    }
  }

  void complete_request(const Message& in, std::vector<Message>& replies) {
    const auto it = awaiting_.find(in.seq);
    if (it == awaiting_.end()) throw ProtocolError("unsolicited " + to_string(in.type) + " for seq " + std::to_string(in.seq));
    Awaiting pending = std::move(it->second);
    awaiting_.erase(it);
    try {
      auto parsed = parse_data(state_.codec(), in.payload, pending.asked);
      if (parsed.ids.primary != pending.ids.primary || parsed.ids.secondary != pending.ids.secondary) {
        throw ValidationError("fingerprint differs from the one announced for seq " + std::to_string(in.seq));
      }
      if (pending.ids.deviation && parsed.ids.deviation != pending.ids.deviation) {
        throw ValidationError("deviation differs from the one announced for seq " + std::to_string(in.seq));
      }
      std::optional<ByteView> payload;
      if (parsed.payload) payload = ByteView(*parsed.payload);
      Bytes chunk = state_.complete(parsed.ids, payload);
      ++counters_.payloads;
      emit(in.seq, std::move(chunk));
      replies.push_back(response(in.seq, Status::ack));
    } catch (...) {
      pending.store->release(pending.key, owner_);
      throw;
    }
  }

  void resolve_parked(std::vector<Message>& replies) {
    if (parked_.empty()) return;
    const auto gen = ctx_->generation();
    if (gen == parked_generation_) return;
    parked_generation_ = gen;
    for (auto it = parked_.begin(); it != parked_.end();) {
      std::optional<Message> r;
      try {
        r = try_resolve(it->first, it->second);
      } catch (const Error& e) {
        const auto seq = it->first;
        it = parked_.erase(it);
        fail(seq, e.what(), replies);
        continue;
      }
      if (r) {
        replies.push_back(std::move(*r));
        it = parked_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void close(const Message& in, std::vector<Message>& replies) {
    if (in.seq != last_seq_ + 1) throw ProtocolError("CLOSE seq out of order");
    if (in.payload.size() != 8) throw ProtocolError("CLOSE needs an 8-byte length");
    if (!awaiting_.empty() || !parked_.empty() || !ready_.empty()) throw ProtocolError("CLOSE before every chunk was settled");
    const auto total = get_be(in.payload, 8);
    const std::uint64_t held = held_ ? held_->size() : 0;
    if (total > emitted_ + held || (held != 0 && total <= emitted_)) {
      throw ProtocolError("CLOSE length " + std::to_string(total) + " does not fit the received stream");
    }
    if (held_) {
      out_(ByteView(*held_).first(total - emitted_));
      emitted_ = total;
      held_.reset();
    }
    close_seq_ = in.seq;
    if (auto_ack_close_) {
      finished_ = true;
      replies.push_back(response(in.seq, Status::ack));
    }
  }

  // Releases bytes in seq order, keeping the newest piece back until CLOSE
  // says how much of it is padding.
  void emit(std::uint32_t seq, Bytes bytes) {
    ready_.emplace(seq, std::move(bytes));
    for (auto it = ready_.begin(); it != ready_.end() && it->first == next_out_; it = ready_.erase(it), ++next_out_) {
      if (held_) {
        out_(*held_);
        emitted_ += held_->size();
      }
      held_ = std::move(it->second);
    }
  }

  void fail(std::uint32_t seq, const std::string& what, std::vector<Message>& replies) {
    last_error_ = what;
    replies.push_back(response(seq, Status::error, what));
    if (++failures_ >= kMaxValidationFailures) {
      disconnect_ = true;
      release_claims();
    }
  }

  std::shared_ptr<SinkContext> ctx_;
  engine::SinkState state_;
  Output out_;
  std::uint64_t owner_;
  bool auto_ack_close_;
  bool configured_ = false;
  bool disconnect_ = false;
  bool finished_ = false;
  int failures_ = 0;
  std::string last_error_;
  std::uint32_t last_seq_ = 0;
  std::uint32_t close_seq_ = 0;
  std::uint32_t next_out_ = 1;
  std::uint64_t emitted_ = 0;
  std::uint64_t bytes_received_ = 0;
  std::uint64_t parked_generation_ = ~std::uint64_t{0};
  std::optional<Bytes> held_;
  std::map<std::uint32_t, Bytes> ready_;
  std::map<std::uint32_t, SchemeIdentifiers> parked_;
  std::map<std::uint32_t, Awaiting> awaiting_;
  ChunkCounters counters_;
};

}  // namespace hermes::protocol

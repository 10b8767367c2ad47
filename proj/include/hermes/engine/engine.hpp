#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hermes/engine/chunker.hpp"
#include "hermes/engine/codec.hpp"
#include "hermes/engine/store.hpp"

namespace hermes::engine {

// What a source emits for one chunk. The payload (basis, or the chunk itself
// under DD and for GD-dual misses) is only present when the receiving side
// cannot know it yet.
struct Token {
  SchemeIdentifiers ids;
  std::optional<Bytes> payload;
  bool verbatim = false;  // the chunk itself, sent because its fingerprint was taken

  friend bool operator==(const Token&, const Token&) = default;
};

// Byte counts of a token stream, split the way the cost model counts them.
struct StreamStats {
  std::uint64_t chunks = 0;
  std::uint64_t payloads = 0;          // tokens carrying a basis or chunk
  std::uint64_t identifier_bytes = 0;  // fingerprints
  std::uint64_t deviation_bytes = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t framing_bytes = 0;  // token flag bytes

  std::uint64_t content_bytes() const noexcept { return identifier_bytes + deviation_bytes + payload_bytes; }
  std::uint64_t wire_bytes() const noexcept { return content_bytes() + framing_bytes; }

  void count(const Token& t) {
    ++chunks;
    identifier_bytes += t.ids.primary.size() + (t.ids.secondary ? t.ids.secondary->size() : 0);
    if (t.ids.deviation) deviation_bytes += t.ids.deviation->size();
    if (t.payload) {
      ++payloads;
      payload_bytes += t.payload->size();
    }
    framing_bytes += 1;
  }
};

// Source side. Tracks which fingerprints the sink has been given a payload
// for; it never keeps the payloads themselves.
class Encoder {
 public:
  explicit Encoder(EngineConfig cfg) : codec_(std::move(cfg)) {}

  const ChunkCodec& codec() const noexcept { return codec_; }
  const StreamStats& stats() const noexcept { return stats_; }

  Token encode_chunk(ByteView chunk) {
    Split s = codec_.split(chunk);
    Token t;
    const bool dual = codec_.scheme() == Scheme::gd_dual;
    const Bytes& primary_full = dual || !codec_.is_gd() ? s.chunk_digest : s.basis_digest;
    if (taken(primary_known_, s.ids.primary, primary_full) ||
        (dual && taken(basis_known_, *s.ids.secondary, s.basis_digest))) {
      t.ids.scheme = codec_.scheme();
      t.payload = std::move(s.chunk);
      t.verbatim = true;
      ++collisions_;
      stats_.count(t);
      return t;
    }
    t.ids = std::move(s.ids);
    if (!dual) {
      if (!mark_known(primary_known_, t.ids.primary, primary_full)) t.payload = std::move(s.basis);
    } else if (mark_known(primary_known_, t.ids.primary, s.chunk_digest)) {
      t.ids.deviation.reset();
    } else if (!mark_known(basis_known_, *t.ids.secondary, s.basis_digest)) {
      t.ids.deviation.reset();
      t.payload = std::move(s.chunk);
    }
    stats_.count(t);
    return t;
  }

  // Chunks sent verbatim because a truncated fingerprint already stood for
  // different content.
  std::uint64_t collisions() const noexcept { return collisions_; }

  // Forget everything the sink was told, as after a restart.
  void reset_known() {
    primary_known_.clear();
    basis_known_.clear();
  }

 private:
  static bool taken(const std::unordered_map<std::string, Bytes>& known, const Bytes& fp, const Bytes& full) {
    const auto it = known.find(key_of(fp));
    return it != known.end() && it->second != full;
  }

  // True if the fingerprint was already known.
  static bool mark_known(std::unordered_map<std::string, Bytes>& known, const Bytes& fp, const Bytes& full) {
    return !known.try_emplace(key_of(fp), full).second;
  }

  ChunkCodec codec_;
  std::unordered_map<std::string, Bytes> primary_known_;
  std::unordered_map<std::string, Bytes> basis_known_;
  StreamStats stats_;
  std::uint64_t collisions_ = 0;
};

// The sink's stores. DD keeps chunks and GD keeps bases under the primary
// fingerprint; GD-dual keeps chunks under the primary and bases under the
// secondary fingerprint.
struct SinkStores {
  std::shared_ptr<FingerprintStore> primary;
  std::shared_ptr<FingerprintStore> basis;  // GD-dual only

  static SinkStores create(const ChunkCodec& codec) {
    SinkStores s;
    s.primary = std::make_shared<FingerprintStore>(codec.layout().primary);
    if (codec.scheme() == Scheme::gd_dual) s.basis = std::make_shared<FingerprintStore>(codec.layout().secondary);
    return s;
  }
};

enum class Probe {
  known,           // the chunk can be rebuilt from what is stored
  need_payload,    // basis (GD) or chunk (DD) unknown
  need_deviation,  // GD-dual: basis known, chunk not
};

// Receiving side shared by the offline decoder and protocol sinks.
class SinkState {
 public:
  explicit SinkState(EngineConfig cfg) : codec_(std::move(cfg)), stores_(SinkStores::create(codec_)) {}
  SinkState(EngineConfig cfg, SinkStores stores) : codec_(std::move(cfg)), stores_(std::move(stores)) {}

  const ChunkCodec& codec() const noexcept { return codec_; }
  const SinkStores& stores() const noexcept { return stores_; }

  Probe probe(const SchemeIdentifiers& ids) const {
    if (stores_.primary->contains(ids.primary)) return Probe::known;
    if (codec_.scheme() == Scheme::gd_dual && stores_.basis->contains(*ids.secondary)) return Probe::need_deviation;
    return Probe::need_payload;
  }

  // Rebuilds the chunk described by `ids`, binding `payload` first if one
  // was sent. Payloads are checked against their fingerprints before they
  // are bound.
  Bytes complete(const SchemeIdentifiers& ids, std::optional<ByteView> payload) {
    check_layout(ids);
    switch (codec_.scheme()) {
      case Scheme::dd: {
        if (payload) {
          if (payload->size() != codec_.chunk_bytes()) throw ValidationError("chunk payload has the wrong length");
          if (codec_.chunk_fingerprint(*payload) != ids.primary) throw ValidationError("chunk does not match its fingerprint");
          bind(*stores_.primary, ids.primary, *payload);
          return Bytes(payload->begin(), payload->end());
        }
        return lookup(*stores_.primary, ids.primary);
      }
      case Scheme::gd_vanilla:
      case Scheme::gd_reduced: {
        if (!ids.deviation) throw ValidationError("generalized token without a deviation");
        Bytes basis;
        if (payload) {
          if (payload->size() != codec_.basis_bytes()) throw ValidationError("basis payload has the wrong length");
          if (codec_.basis_fingerprint(*payload) != ids.primary) throw ValidationError("basis does not match its fingerprint");
          bind(*stores_.primary, ids.primary, *payload);
          basis.assign(payload->begin(), payload->end());
        } else {
          basis = lookup(*stores_.primary, ids.primary);
        }
        return codec_.materialize(basis, *ids.deviation);
      }
      case Scheme::gd_dual: {
        if (payload) {
          if (payload->size() != codec_.chunk_bytes()) throw ValidationError("chunk payload has the wrong length");
          Split s = codec_.split(*payload);
          if (s.ids.primary != ids.primary) throw ValidationError("chunk does not match its fingerprint");
          if (*s.ids.secondary != *ids.secondary) throw ValidationError("basis does not match its fingerprint");
          bind(*stores_.basis, *ids.secondary, s.basis);
          bind(*stores_.primary, ids.primary, *payload);
          return std::move(s.chunk);
        }
        if (ids.deviation) {
          const Bytes basis = lookup(*stores_.basis, *ids.secondary);
          Bytes chunk = codec_.materialize(basis, *ids.deviation);
          // Both halves agree only if the rebuilt chunk is the one fingerprinted.
          if (codec_.chunk_fingerprint(chunk) != ids.primary) {
            throw ValidationError("rebuilt chunk does not match its fingerprint");
          }
          bind(*stores_.primary, ids.primary, chunk);
          return chunk;
        }
        return lookup(*stores_.primary, ids.primary);
      }
    }
    throw ProtocolError("unknown scheme");
  }

 private:
  void check_layout(const SchemeIdentifiers& ids) const {
    if (ids.scheme != codec_.scheme()) throw ValidationError("token scheme does not match configuration");
    if (ids.primary.size() != codec_.layout().primary) throw ValidationError("fingerprint length mismatch");
    if (codec_.scheme() == Scheme::gd_dual && (!ids.secondary || ids.secondary->size() != codec_.layout().secondary)) {
      throw ValidationError("dual token needs a basis fingerprint");
    }
  }

  static void bind(FingerprintStore& store, ByteView fp, ByteView payload) {
    if (store.insert_if_absent(fp, payload) == InsertResult::conflict) {
      throw CollisionError("fingerprint " + to_hex(fp) + " is already bound to a different payload");
    }
  }

  static Bytes lookup(const FingerprintStore& store, ByteView fp) {
    auto found = store.find(fp);
    if (!found) throw MissingBasis("unknown fingerprint " + to_hex(fp));
    return std::move(*found);
  }

  ChunkCodec codec_;
  SinkStores stores_;
};

class Decoder {
 public:
  explicit Decoder(EngineConfig cfg) : sink_(std::move(cfg)) {}
  Decoder(EngineConfig cfg, SinkStores stores) : sink_(std::move(cfg), std::move(stores)) {}

  Bytes decode_token(const Token& t) {
    if (t.verbatim) {
      if (!t.payload || t.payload->size() != sink_.codec().chunk_bytes()) throw ValidationError("verbatim token needs a whole chunk");
      return *t.payload;
    }
    if (t.payload) return sink_.complete(t.ids, ByteView(*t.payload));
    return sink_.complete(t.ids, std::nullopt);
  }

  SinkState& sink() noexcept { return sink_; }

 private:
  SinkState sink_;
};

// Token wire form: flag byte (bit 0 payload, bit 1 deviation), primary
// fingerprint, secondary fingerprint (GD-dual), deviation, payload. A
// verbatim token is flag 4 followed by the chunk.
inline void serialize_token(const Token& t, Bytes& out) {
  if (t.verbatim) {
    out.push_back(4);
    append(out, *t.payload);
    return;
  }
  out.push_back(static_cast<std::uint8_t>((t.payload ? 1 : 0) | (t.ids.deviation ? 2 : 0)));
  append(out, t.ids.primary);
  if (t.ids.secondary) append(out, *t.ids.secondary);
  if (t.ids.deviation) append(out, *t.ids.deviation);
  if (t.payload) append(out, *t.payload);
}

// Parses one token from the front of `in`; returns the bytes consumed.
inline std::size_t parse_token(ByteView in, const ChunkCodec& codec, Token& t) {
  auto need = [&](std::size_t off, std::size_t n) {
    if (in.size() < off + n) throw CorruptInput("truncated token");
  };
  need(0, 1);
  const std::uint8_t flags = in[0];
  if (flags > 4) throw CorruptInput("bad token flags");
  std::size_t off = 1;
  const auto& layout = codec.layout();
  t = Token{};
  t.ids.scheme = codec.scheme();
  if (flags == 4) {
    need(off, codec.chunk_bytes());
    t.payload = Bytes(in.begin() + 1, in.begin() + static_cast<std::ptrdiff_t>(1 + codec.chunk_bytes()));
    t.verbatim = true;
    return 1 + codec.chunk_bytes();
  }
  need(off, layout.primary);
  t.ids.primary.assign(in.begin() + static_cast<std::ptrdiff_t>(off), in.begin() + static_cast<std::ptrdiff_t>(off + layout.primary));
  off += layout.primary;
  if (layout.secondary != 0) {
    need(off, layout.secondary);
    t.ids.secondary = Bytes(in.begin() + static_cast<std::ptrdiff_t>(off), in.begin() + static_cast<std::ptrdiff_t>(off + layout.secondary));
    off += layout.secondary;
  }
  if (flags & 2) {
    const std::size_t len = codec.deviation_length(in.subspan(off));
    need(off, len);
    t.ids.deviation = Bytes(in.begin() + static_cast<std::ptrdiff_t>(off), in.begin() + static_cast<std::ptrdiff_t>(off + len));
    off += len;
  }
  if (flags & 1) {
    const std::size_t len = codec.scheme() == Scheme::dd || codec.scheme() == Scheme::gd_dual ? codec.chunk_bytes() : codec.basis_bytes();
    need(off, len);
    t.payload = Bytes(in.begin() + static_cast<std::ptrdiff_t>(off), in.begin() + static_cast<std::ptrdiff_t>(off + len));
    off += len;
  }
  return off;
}

struct EncodedStream {
  std::vector<Token> tokens;
  std::size_t original_length = 0;
};

inline EncodedStream encode_stream(ByteView data, Encoder& encoder) {
  EncodedStream out;
  auto chunked = split_into_chunks(data, encoder.codec().chunk_bytes());
  out.original_length = chunked.original_length;
  out.tokens.reserve(chunked.chunks.size());
  for (const auto& c : chunked.chunks) out.tokens.push_back(encoder.encode_chunk(c));
  return out;
}

inline Bytes decode_stream(const EncodedStream& stream, Decoder& decoder) {
  std::vector<Bytes> chunks;
  chunks.reserve(stream.tokens.size());
  for (const auto& t : stream.tokens) chunks.push_back(decoder.decode_token(t));
  return reassemble(chunks, stream.original_length);
}

}  // namespace hermes::engine

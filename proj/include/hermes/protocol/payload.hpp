#pragma once

#include "hermes/engine/codec.hpp"
#include "hermes/protocol/message.hpp"

namespace hermes::protocol {

// Payload layouts of the deduplicating messages.
//
//   DEDUP           primary
//   DEDUP_DATA      primary | chunk
//   GEN_DEDUP       primary | deviation             (gd-vanilla, gd-reduced)
//                   primary | secondary             (gd-dual)
//   GEN_DEDUP_DATA  primary | deviation | basis     (gd-vanilla, gd-reduced)
//                   primary | secondary | deviation (gd-dual, after DEVIATION_REQUEST)
//                   primary | secondary | chunk     (gd-dual, after CHUNK_REQUEST)
//
// A *_DATA message answers a request for the same seq; everything before the
// requested part repeats that seq's first message.

inline MsgType first_type(Scheme s) { return s == Scheme::dd ? MsgType::dedup : MsgType::gen_dedup; }
inline MsgType data_type(Scheme s) { return s == Scheme::dd ? MsgType::dedup_data : MsgType::gen_dedup_data; }

inline Bytes identifier_bytes(const SchemeIdentifiers& ids) {
  Bytes out = ids.primary;
  if (ids.secondary) append(out, *ids.secondary);
  return out;
}

inline Message first_message(const engine::ChunkCodec& codec, const engine::Split& s, std::uint32_t seq) {
  Message m{first_type(codec.scheme()), Status::ack, seq, identifier_bytes(s.ids)};
  if (codec.scheme() == Scheme::gd_vanilla || codec.scheme() == Scheme::gd_reduced) append(m.payload, s.deviation);
  return m;
}

struct DataMessage {
  Message message;
  std::size_t echo_bytes = 0;  // repeated from the first message
};

inline DataMessage data_message(const engine::ChunkCodec& codec, const engine::Split& s, Status asked, std::uint32_t seq) {
  DataMessage d;
  d.message = first_message(codec, s, seq);
  d.message.type = data_type(codec.scheme());
  d.echo_bytes = d.message.payload.size();
  switch (codec.scheme()) {
    case Scheme::dd:
      append(d.message.payload, s.chunk);
      break;
    case Scheme::gd_vanilla:
    case Scheme::gd_reduced:
      append(d.message.payload, s.basis);
      break;
    case Scheme::gd_dual:
      append(d.message.payload, asked == Status::deviation_request ? s.deviation : s.chunk);
      break;
  }
  return d;
}

namespace detail {

inline Bytes take(ByteView in, std::size_t& off, std::size_t n, const char* what) {
  if (in.size() < off + n) throw ValidationError(std::string("message too short for its ") + what);
  Bytes out(in.begin() + static_cast<std::ptrdiff_t>(off), in.begin() + static_cast<std::ptrdiff_t>(off + n));
  off += n;
  return out;
}

inline SchemeIdentifiers take_ids(const engine::ChunkCodec& codec, ByteView in, std::size_t& off) {
  SchemeIdentifiers ids;
  ids.scheme = codec.scheme();
  ids.primary = take(in, off, codec.layout().primary, "fingerprint");
  if (codec.layout().secondary != 0) ids.secondary = take(in, off, codec.layout().secondary, "basis fingerprint");
  return ids;
}

inline Bytes take_deviation(const engine::ChunkCodec& codec, ByteView in, std::size_t& off) {
  try {
    return take(in, off, codec.deviation_length(in.subspan(std::min(off, in.size()))), "deviation");
  } catch (const CorruptDeviation& e) {
    throw ValidationError(std::string("bad deviation: ") + e.what());
  }
}

inline void expect_end(ByteView in, std::size_t off) {
  if (off != in.size()) throw ValidationError("trailing bytes in message");
}

}  // namespace detail

// Identifiers (and deviation, where the first message has one) of a DEDUP or GEN_DEDUP.
inline SchemeIdentifiers parse_first(const engine::ChunkCodec& codec, ByteView in) {
  std::size_t off = 0;
  auto ids = detail::take_ids(codec, in, off);
  if (codec.scheme() == Scheme::gd_vanilla || codec.scheme() == Scheme::gd_reduced) {
    ids.deviation = detail::take_deviation(codec, in, off);
  }
  detail::expect_end(in, off);
  return ids;
}

struct ParsedData {
  SchemeIdentifiers ids;
  std::optional<Bytes> payload;
};

inline ParsedData parse_data(const engine::ChunkCodec& codec, ByteView in, Status asked) {
  std::size_t off = 0;
  ParsedData d;
  d.ids = detail::take_ids(codec, in, off);
  switch (codec.scheme()) {
    case Scheme::dd:
      d.payload = detail::take(in, off, codec.chunk_bytes(), "chunk");
      break;
    case Scheme::gd_vanilla:
    case Scheme::gd_reduced:
      d.ids.deviation = detail::take_deviation(codec, in, off);
      d.payload = detail::take(in, off, codec.basis_bytes(), "basis");
      break;
    case Scheme::gd_dual:
      if (asked == Status::deviation_request) {
        d.ids.deviation = detail::take_deviation(codec, in, off);
      } else {
        d.payload = detail::take(in, off, codec.chunk_bytes(), "chunk");
      }
      break;
  }
  detail::expect_end(in, off);
  return d;
}

}  // namespace hermes::protocol

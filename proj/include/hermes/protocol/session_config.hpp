#pragma once

#include <string>

#include "hermes/engine/codec.hpp"
#include "hermes/protocol/message.hpp"

namespace hermes::protocol {

enum class Role : std::uint8_t { source, intermediate, sink };
enum class NodeClass : std::uint8_t { basic, dedup, gd };

inline Role parse_role(std::string_view s) {
  if (s == "source") return Role::source;
  if (s == "intermediate") return Role::intermediate;
  if (s == "sink") return Role::sink;
  throw ConfigError("unknown role '" + std::string(s) + "'");
}

inline NodeClass parse_class(std::string_view s) {
  if (s == "basic") return NodeClass::basic;
  if (s == "dedup") return NodeClass::dedup;
  if (s == "gd" || s == "gen-dedup") return NodeClass::gd;
  throw ConfigError("unknown node class '" + std::string(s) + "'");
}

inline std::string to_string(Role r) {
  switch (r) {
    case Role::source: return "source";
    case Role::intermediate: return "intermediate";
    case Role::sink: return "sink";
  }
  return "?";
}

inline std::string to_string(NodeClass c) {
  switch (c) {
    case NodeClass::basic: return "basic";
    case NodeClass::dedup: return "dedup";
    case NodeClass::gd: return "gd";
  }
  return "?";
}

// Which data messages a node of each class sends. Every class accepts DATA.
inline bool may_emit(NodeClass c, MsgType t) {
  switch (c) {
    case NodeClass::basic: return t == MsgType::data;
    case NodeClass::dedup: return t == MsgType::dedup || t == MsgType::dedup_data;
    case NodeClass::gd: return t == MsgType::gen_dedup || t == MsgType::gen_dedup_data;
  }
  return false;
}

inline bool may_receive(NodeClass c, MsgType t) { return t == MsgType::data || may_emit(c, t); }

// Dedup nodes run DD, generalized deduplication nodes one of the GD layouts.
inline void check_class_scheme(NodeClass c, Scheme s) {
  if (c == NodeClass::dedup && s != Scheme::dd) throw ConfigError("dedup nodes need scheme dd");
  if (c == NodeClass::gd && s == Scheme::dd) throw ConfigError("gd nodes need a gd-* scheme");
}

// CONFIG payload: n_B u32, transform id u8 + params, fingerprint algorithm
// u8, h_B u8, scheme u8, preprocessing mode u8, sample width u8.
inline Bytes encode_config(const engine::EngineConfig& c) {
  Bytes out;
  put_be(out, static_cast<std::uint32_t>(c.chunk_bytes()));
  out.push_back(static_cast<std::uint8_t>(c.transform.kind()));
  switch (c.transform.kind()) {
    case ecc::TransformKind::identity:
      break;
    case ecc::TransformKind::hamming:
      out.push_back(static_cast<std::uint8_t>(c.transform.hamming_config()->m));
      break;
    case ecc::TransformKind::reed_solomon:
      out.push_back(static_cast<std::uint8_t>(c.transform.rs_config()->n));
      out.push_back(static_cast<std::uint8_t>(c.transform.rs_config()->k));
      break;
  }
  out.push_back(static_cast<std::uint8_t>(c.fp.algorithm));
  out.push_back(static_cast<std::uint8_t>(c.fp.length));
  out.push_back(static_cast<std::uint8_t>(c.scheme));
  out.push_back(static_cast<std::uint8_t>(c.mode));
  out.push_back(static_cast<std::uint8_t>(c.layout.width));
  return out;
}

inline Message config_message(const engine::EngineConfig& c) { return Message{MsgType::config, Status::ack, 0, encode_config(c)}; }

inline engine::EngineConfig decode_config(ByteView in) {
  std::size_t off = 0;
  auto take = [&](std::size_t n) {
    if (in.size() < off + n) throw ProtocolError("truncated CONFIG");
    const auto v = get_be(in.subspan(off), n);
    off += n;
    return v;
  };
  try {
    const auto n_b = take(4);
    const auto kind = take(1);
    std::optional<ecc::Transform> t;
    if (kind == static_cast<std::uint8_t>(ecc::TransformKind::identity)) {
      t = ecc::Transform::identity(n_b);
    } else if (kind == static_cast<std::uint8_t>(ecc::TransformKind::hamming)) {
      t = ecc::Transform::hamming(static_cast<unsigned>(take(1)));
    } else if (kind == static_cast<std::uint8_t>(ecc::TransformKind::reed_solomon)) {
      const auto n = take(1);
      t = ecc::Transform::reed_solomon(n, take(1));
    } else {
      throw ProtocolError("unknown transform id " + std::to_string(kind));
    }
    if (t->chunk_bytes() != n_b) throw ProtocolError("CONFIG chunk length disagrees with its transform");
    const auto algo = take(1);
    if (algo > static_cast<std::uint8_t>(FingerprintAlgorithm::sha256)) throw ProtocolError("unknown fingerprint algorithm");
    const auto fp = make_fingerprint_config(static_cast<FingerprintAlgorithm>(algo), take(1));
    const auto scheme = take(1);
    if (scheme > static_cast<std::uint8_t>(Scheme::gd_dual)) throw ProtocolError("unknown scheme");
    const auto mode = take(1);
    if (mode > static_cast<std::uint8_t>(preprocess::Mode::offset)) throw ProtocolError("unknown preprocessing mode");
    const auto layout = preprocess::make_layout(static_cast<unsigned>(take(1)));
    if (off != in.size()) throw ProtocolError("trailing bytes in CONFIG");
    return engine::EngineConfig(*t, static_cast<Scheme>(scheme), fp, static_cast<preprocess::Mode>(mode), layout);
  } catch (const ConfigError& e) {
    throw ProtocolError(std::string("bad CONFIG: ") + e.what());
  }
}

// Payload of CLOSE: the original stream length, so the sink can drop padding.
inline Message close_message(std::uint32_t seq, std::uint64_t total_length) {
  Message m{MsgType::close, Status::ack, seq, {}};
  put_be(m.payload, total_length);
  return m;
}

}  // namespace hermes::protocol

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hermes/bytes.hpp"
#include "hermes/error.hpp"

namespace hermes::protocol {

enum class MsgType : std::uint8_t {
  response = 0,
  data = 1,
  dedup = 2,
  dedup_data = 3,
  gen_dedup = 4,
  gen_dedup_data = 5,
  config = 0xC0,  // session handshake, seq 0
  close = 0xC1,   // end of stream: u64 original length
};

enum class Status : std::uint8_t {
  ack = 0,
  new_fingerprint = 1,
  deviation_request = 2,
  chunk_request = 3,
  error = 4,
};

inline std::string to_string(MsgType t) {
  switch (t) {
    case MsgType::response: return "RESPONSE";
    case MsgType::data: return "DATA";
    case MsgType::dedup: return "DEDUP";
    case MsgType::dedup_data: return "DEDUP_DATA";
    case MsgType::gen_dedup: return "GEN_DEDUP";
    case MsgType::gen_dedup_data: return "GEN_DEDUP_DATA";
    case MsgType::config: return "CONFIG";
    case MsgType::close: return "CLOSE";
  }
  return "?";
}

inline std::string to_string(Status s) {
  switch (s) {
    case Status::ack: return "ACK";
    case Status::new_fingerprint: return "NEW_FINGERPRINT";
    case Status::deviation_request: return "DEVIATION_REQUEST";
    case Status::chunk_request: return "CHUNK_REQUEST";
    case Status::error: return "ERROR";
  }
  return "?";
}

struct Message {
  MsgType type = MsgType::response;
  Status status = Status::ack;  // responses only; zero on the wire otherwise
  std::uint32_t seq = 0;
  Bytes payload;

  friend bool operator==(const Message&, const Message&) = default;
};

inline Message response(std::uint32_t seq, Status s, std::string_view text = {}) {
  return Message{MsgType::response, s, seq, to_bytes(text)};
}

inline std::string describe(const Message& m) {
  std::string out = to_string(m.type);
  if (m.type == MsgType::response) out += "(" + to_string(m.status) + ")";
  return out + " seq=" + std::to_string(m.seq) + " len=" + std::to_string(m.payload.size());
}

// Frame: [type u8][status u8][seq u32][length u32][payload], big-endian.
inline constexpr std::size_t kFrameHeaderBytes = 10;
inline constexpr std::uint32_t kMaxPayloadBytes = 64u << 20;

inline void encode_message(const Message& m, Bytes& out) {
  if (m.payload.size() > kMaxPayloadBytes) throw FrameError("payload too large for a frame");
  out.push_back(static_cast<std::uint8_t>(m.type));
  out.push_back(m.type == MsgType::response ? static_cast<std::uint8_t>(m.status) : 0);
  put_be(out, m.seq);
  put_be(out, static_cast<std::uint32_t>(m.payload.size()));
  append(out, m.payload);
}

inline Bytes encode_message(const Message& m) {
  Bytes out;
  out.reserve(kFrameHeaderBytes + m.payload.size());
  encode_message(m, out);
  return out;
}

namespace detail {

inline bool known_type(std::uint8_t t) {
  return t <= static_cast<std::uint8_t>(MsgType::gen_dedup_data) || t == static_cast<std::uint8_t>(MsgType::config) ||
         t == static_cast<std::uint8_t>(MsgType::close);
}

// Validates a header and returns the declared payload length.
inline std::uint32_t check_header(ByteView h) {
  if (!known_type(h[0])) throw FrameError("unknown message type " + std::to_string(h[0]));
  const bool is_response = h[0] == static_cast<std::uint8_t>(MsgType::response);
  if (is_response ? h[1] > static_cast<std::uint8_t>(Status::error) : h[1] != 0) {
    throw FrameError("bad status byte " + std::to_string(h[1]));
  }
  const auto len = static_cast<std::uint32_t>(get_be(h.subspan(6), 4));
  if (len > kMaxPayloadBytes) throw FrameError("declared payload length " + std::to_string(len) + " too large");
  return len;
}

inline Message build(ByteView frame, std::uint32_t len) {
  Message m;
  m.type = static_cast<MsgType>(frame[0]);
  m.status = static_cast<Status>(frame[1]);
  m.seq = static_cast<std::uint32_t>(get_be(frame.subspan(2), 4));
  m.payload.assign(frame.begin() + kFrameHeaderBytes, frame.begin() + kFrameHeaderBytes + len);
  return m;
}

}  // namespace detail

// Decodes exactly one frame.
inline Message decode_message(ByteView frame) {
  if (frame.size() < kFrameHeaderBytes) throw FrameError("truncated frame header");
  const auto len = detail::check_header(frame);
  if (frame.size() != kFrameHeaderBytes + len) throw FrameError("frame length does not match its header");
  return detail::build(frame, len);
}

// Incremental decoder for a byte stream.
class FrameReader {
 public:
  void push(ByteView data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

  std::optional<Message> next() {
    const std::size_t avail = buf_.size() - off_;
    if (avail < kFrameHeaderBytes) return std::nullopt;
    const ByteView view(buf_.data() + off_, avail);
    const auto len = detail::check_header(view);
    if (avail < kFrameHeaderBytes + len) return std::nullopt;
    Message m = detail::build(view, len);
    off_ += kFrameHeaderBytes + len;
    if (off_ == buf_.size()) {
      buf_.clear();
      off_ = 0;
    } else if (off_ > (1u << 20)) {
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(off_));
      off_ = 0;
    }
    return m;
  }

  std::size_t buffered() const noexcept { return buf_.size() - off_; }

 private:
  Bytes buf_;
  std::size_t off_ = 0;
};

}  // namespace hermes::protocol

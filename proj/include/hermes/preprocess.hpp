#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hermes/bytes.hpp"
#include "hermes/error.hpp"

// Packet-local preprocessing run on a chunk before the transform. Every
// function here looks at one chunk only.
namespace hermes::preprocess {

// Unsigned big-endian samples packed back to back inside a chunk.
struct SampleLayout {
  unsigned width = 1;  // bytes per sample: 1, 2 or 4

  std::int64_t max_value() const noexcept { return (std::int64_t{1} << (8 * width)) - 1; }
  friend bool operator==(const SampleLayout&, const SampleLayout&) = default;
};

inline SampleLayout make_layout(unsigned width) {
  if (width != 1 && width != 2 && width != 4) {
    throw ConfigError("sample width must be 1, 2 or 4 bytes, got " + std::to_string(width));
  }
  return SampleLayout{width};
}

enum class Mode : std::uint8_t { none = 0, delta = 1, offset = 2 };

inline Mode parse_mode(std::string_view s) {
  if (s == "none") return Mode::none;
  if (s == "delta") return Mode::delta;
  if (s == "offset") return Mode::offset;
  throw ConfigError("unknown preprocessing mode '" + std::string(s) + "'");
}

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::none: return "none";
    case Mode::delta: return "delta";
    case Mode::offset: return "offset";
  }
  return "?";
}

using Samples = std::vector<std::int64_t>;

inline Samples delta_encode(std::span<const std::int64_t> samples) {
  if (samples.empty()) throw ArgumentError("delta encoding needs at least one sample");
  Samples out(samples.size());
  out[0] = samples[0];
  for (std::size_t i = 1; i < samples.size(); ++i) out[i] = samples[i] - samples[i - 1];
  return out;
}

inline Samples delta_decode(std::span<const std::int64_t> deltas, SampleLayout layout) {
  if (deltas.empty()) throw ArgumentError("delta decoding needs at least one value");
  Samples out(deltas.size());
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    acc = i == 0 ? deltas[0] : acc + deltas[i];
    if (acc < 0 || acc > layout.max_value()) throw CorruptInput("delta decoding left the sample range");
    out[i] = acc;
  }
  return out;
}

struct OffsetRemoved {
  Samples residuals;
  std::int64_t min_value = 0;
};

inline OffsetRemoved offset_remove(std::span<const std::int64_t> samples) {
  if (samples.empty()) throw ArgumentError("offset removal needs at least one sample");
  OffsetRemoved out;
  out.min_value = *std::min_element(samples.begin(), samples.end());
  out.residuals.reserve(samples.size());
  for (auto s : samples) out.residuals.push_back(s - out.min_value);
  return out;
}

inline Samples offset_restore(std::span<const std::int64_t> residuals, std::int64_t min_value,
                              SampleLayout layout) {
  Samples out;
  out.reserve(residuals.size());
  for (auto r : residuals) {
    const std::int64_t v = r + min_value;
    if (r < 0 || v < 0 || v > layout.max_value()) throw CorruptInput("offset restore left the sample range");
    out.push_back(v);
  }
  return out;
}

inline Samples unpack(ByteView chunk, SampleLayout layout) {
  if (chunk.size() % layout.width != 0) throw ArgumentError("chunk length is not a whole number of samples");
  Samples out;
  out.reserve(chunk.size() / layout.width);
  for (std::size_t i = 0; i < chunk.size(); i += layout.width) {
    out.push_back(static_cast<std::int64_t>(get_be(chunk.subspan(i), layout.width)));
  }
  return out;
}

inline Bytes pack(std::span<const std::int64_t> samples, SampleLayout layout) {
  Bytes out;
  out.reserve(samples.size() * layout.width);
  for (auto s : samples) put_be(out, static_cast<std::uint64_t>(s), layout.width);
  return out;
}

// The chunk body handed to the transform plus the bytes appended to the
// deviation: a one-byte mode tag and, for offset removal, the minimum.
struct Prepared {
  Bytes body;
  Bytes extra;
};

inline Prepared apply(ByteView chunk, Mode mode, SampleLayout layout) {
  if (mode == Mode::none) return {Bytes(chunk.begin(), chunk.end()), {}};
  const Samples samples = unpack(chunk, layout);
  if (mode == Mode::offset) {
    auto removed = offset_remove(samples);
    Prepared p{pack(removed.residuals, layout), {static_cast<std::uint8_t>(Mode::offset)}};
    put_be(p.extra, static_cast<std::uint64_t>(removed.min_value), layout.width);
    return p;
  }
  // Delta: first sample verbatim, the rest two's complement in the same width.
  const Samples deltas = delta_encode(samples);
  const std::int64_t limit = std::int64_t{1} << (8 * layout.width - 1);
  const bool fits = std::all_of(deltas.begin() + 1, deltas.end(),
                                [limit](std::int64_t d) { return d >= -limit && d < limit; });
  if (!fits) return {Bytes(chunk.begin(), chunk.end()), {static_cast<std::uint8_t>(Mode::none)}};
  const std::uint64_t mask = static_cast<std::uint64_t>(layout.max_value());
  Bytes body;
  body.reserve(chunk.size());
  for (auto d : deltas) put_be(body, static_cast<std::uint64_t>(d) & mask, layout.width);
  return {std::move(body), {static_cast<std::uint8_t>(Mode::delta)}};
}

// Bytes of preprocessing extra at the front of `tail`.
inline std::size_t extra_length(ByteView tail, Mode mode, SampleLayout layout) {
  if (mode == Mode::none) return 0;
  if (tail.empty()) throw CorruptDeviation("missing preprocessing tag");
  switch (static_cast<Mode>(tail[0])) {
    case Mode::none:
    case Mode::delta:
      return 1;
    case Mode::offset:
      return 1 + layout.width;
  }
  throw CorruptDeviation("unknown preprocessing tag " + std::to_string(tail[0]));
}

inline Bytes undo(ByteView body, ByteView extra, Mode mode, SampleLayout layout) {
  if (mode == Mode::none) {
    if (!extra.empty()) throw CorruptDeviation("unexpected preprocessing extra");
    return Bytes(body.begin(), body.end());
  }
  if (extra.empty() || extra.size() != extra_length(extra, mode, layout)) {
    throw CorruptDeviation("malformed preprocessing extra");
  }
  switch (static_cast<Mode>(extra[0])) {
    case Mode::none:
      return Bytes(body.begin(), body.end());
    case Mode::offset: {
      if (mode != Mode::offset) throw CorruptDeviation("offset tag under a delta configuration");
      const auto min_value = static_cast<std::int64_t>(get_be(extra.subspan(1), layout.width));
      return pack(offset_restore(unpack(body, layout), min_value, layout), layout);
    }
    case Mode::delta: {
      if (mode != Mode::delta) throw CorruptDeviation("delta tag under an offset configuration");
      Samples deltas = unpack(body, layout);
      const std::int64_t half = std::int64_t{1} << (8 * layout.width - 1);
      for (std::size_t i = 1; i < deltas.size(); ++i) {
        if (deltas[i] >= half) deltas[i] -= std::int64_t{1} << (8 * layout.width);
      }
      return pack(delta_decode(deltas, layout), layout);
    }
  }
  throw CorruptDeviation("unknown preprocessing tag");
}

}  // namespace hermes::preprocess

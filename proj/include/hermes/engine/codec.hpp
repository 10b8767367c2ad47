#pragma once

#include <string>

#include "hermes/ecc/transform.hpp"
#include "hermes/fingerprint.hpp"
#include "hermes/preprocess.hpp"

namespace hermes::engine {

// Deployment-wide chunking configuration. Every node talking to another
// must agree on all of it.
struct EngineConfig {
  ecc::Transform transform;
  Scheme scheme = Scheme::gd_vanilla;
  preprocess::Mode mode = preprocess::Mode::none;
  preprocess::SampleLayout layout{};
  FingerprintConfig fp{};

  EngineConfig(ecc::Transform t, Scheme s, FingerprintConfig f = {},
               preprocess::Mode m = preprocess::Mode::none, preprocess::SampleLayout l = {})
      : transform(std::move(t)), scheme(s), mode(m), layout(l), fp(f) {}

  std::size_t chunk_bytes() const noexcept { return transform.chunk_bytes(); }

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

inline std::string describe(const EngineConfig& c) {
  return to_string(c.scheme) + " " + c.transform.to_string() + " fp=" + to_string(c.fp) +
         " pre=" + preprocess::to_string(c.mode) + "/" + std::to_string(c.layout.width);
}

// A chunk taken apart for transmission.
struct Split {
  Bytes chunk;
  Bytes basis;      // payload a GD sink stores; the chunk itself under DD
  Bytes deviation;  // transform deviation followed by any preprocessing extra
  SchemeIdentifiers ids;
  Bytes chunk_digest;  // untruncated, used for collision checks
  Bytes basis_digest;
};

// Stateless per-configuration codec: chunk <-> (identifiers, basis, deviation).
// DD runs through the identity transform and ignores preprocessing.
class ChunkCodec {
 public:
  explicit ChunkCodec(EngineConfig cfg)
      : cfg_(std::move(cfg)),
        transform_(cfg_.scheme == Scheme::dd ? ecc::Transform::identity(cfg_.chunk_bytes()) : cfg_.transform),
        mode_(cfg_.scheme == Scheme::dd ? preprocess::Mode::none : cfg_.mode),
        layout_(identifier_layout(cfg_.scheme, cfg_.fp, transform_.fixed_deviation_bytes())) {
    if (mode_ != preprocess::Mode::none && cfg_.chunk_bytes() % cfg_.layout.width != 0) {
      throw ConfigError("chunk length " + std::to_string(cfg_.chunk_bytes()) + " is not a multiple of the " +
                        std::to_string(cfg_.layout.width) + "-byte sample width");
    }
  }

  const EngineConfig& config() const noexcept { return cfg_; }
  Scheme scheme() const noexcept { return cfg_.scheme; }
  const ecc::Transform& transform() const noexcept { return transform_; }
  const IdentifierLayout& layout() const noexcept { return layout_; }
  std::size_t chunk_bytes() const noexcept { return transform_.chunk_bytes(); }
  std::size_t basis_bytes() const noexcept { return transform_.basis_bytes(); }
  bool is_gd() const noexcept { return cfg_.scheme != Scheme::dd; }

  Split split(ByteView chunk) const {
    if (chunk.size() != chunk_bytes()) throw ArgumentError("chunk length does not match configuration");
    Split s;
    s.chunk.assign(chunk.begin(), chunk.end());
    auto prepared = preprocess::apply(chunk, mode_, cfg_.layout);
    auto bd = transform_.split(prepared.body);
    s.basis = std::move(bd.basis);
    s.deviation = std::move(bd.deviation);
    append(s.deviation, prepared.extra);

    s.ids.scheme = cfg_.scheme;
    const bool need_chunk_fp = cfg_.scheme == Scheme::dd || cfg_.scheme == Scheme::gd_dual;
    if (need_chunk_fp) s.chunk_digest = digest(chunk, cfg_.fp.algorithm);
    if (cfg_.scheme != Scheme::dd) s.basis_digest = digest(s.basis, cfg_.fp.algorithm);
    switch (cfg_.scheme) {
      case Scheme::dd:
        s.basis_digest = s.chunk_digest;
        s.ids.primary = prefix(s.chunk_digest, layout_.primary);
        break;
      case Scheme::gd_vanilla:
      case Scheme::gd_reduced:
        s.ids.primary = prefix(s.basis_digest, layout_.primary);
        s.ids.deviation = s.deviation;
        break;
      case Scheme::gd_dual:
        s.ids.primary = prefix(s.chunk_digest, layout_.primary);
        s.ids.secondary = prefix(s.basis_digest, layout_.secondary);
        s.ids.deviation = s.deviation;
        break;
    }
    return s;
  }

  Bytes materialize(ByteView basis, ByteView deviation) const {
    const std::size_t dev_len = transform_.deviation_length(deviation);
    if (dev_len > deviation.size()) throw CorruptDeviation("deviation shorter than its transform part");
    const auto extra = deviation.subspan(dev_len);
    if (extra.size() != preprocess::extra_length(extra, mode_, cfg_.layout)) {
      throw CorruptDeviation("deviation length does not match configuration");
    }
    ecc::BasisDeviation bd{Bytes(basis.begin(), basis.end()), Bytes(deviation.begin(), deviation.begin() + static_cast<std::ptrdiff_t>(dev_len))};
    const Bytes body = transform_.merge(bd);
    return preprocess::undo(body, extra, mode_, cfg_.layout);
  }

  // Length of the deviation at the front of `tail` (transform part plus extra).
  std::size_t deviation_length(ByteView tail) const {
    const std::size_t dev_len = transform_.deviation_length(tail);
    if (dev_len > tail.size()) throw CorruptDeviation("truncated deviation");
    return dev_len + preprocess::extra_length(tail.subspan(dev_len), mode_, cfg_.layout);
  }

  Bytes chunk_fingerprint(ByteView chunk) const {
    return fingerprint(chunk, cfg_.fp, layout_.primary);
  }

  // Fingerprint of a basis as it appears on the wire for this scheme.
  Bytes basis_fingerprint(ByteView basis) const {
    return fingerprint(basis, cfg_.fp, cfg_.scheme == Scheme::gd_dual ? layout_.secondary : layout_.primary);
  }

 private:
  static Bytes prefix(const Bytes& d, std::size_t n) { return Bytes(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n)); }

  EngineConfig cfg_;
  ecc::Transform transform_;
  preprocess::Mode mode_;
  IdentifierLayout layout_;
};

}  // namespace hermes::engine

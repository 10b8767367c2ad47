#pragma once

#include <charconv>
#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "hermes/ecc/hamming.hpp"
#include "hermes/ecc/reed_solomon.hpp"

namespace hermes::ecc {

// basis = chunk, empty deviation. This is what classic deduplication uses.
struct IdentityConfig {
  std::size_t chunk_bytes = 0;
  friend bool operator==(const IdentityConfig&, const IdentityConfig&) = default;
};

enum class TransformKind : std::uint8_t { identity = 0, hamming = 1, reed_solomon = 2 };

// A chunk <-> (basis, deviation) mapping chosen at configuration time.
class Transform {
 public:
  static Transform identity(std::size_t chunk_bytes) {
    if (chunk_bytes == 0) throw ConfigError("identity transform needs a positive chunk length");
    return Transform(IdentityConfig{chunk_bytes});
  }
  static Transform hamming(unsigned m) { return Transform(hamming_params(m)); }
  static Transform reed_solomon(std::size_t n, std::size_t k) { return Transform(rs_params(n, k)); }

  // "identity:N", "hamming:M" or "rs:N,K".
  static Transform parse(std::string_view spec) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw ConfigError("transform spec needs a ':' (" + std::string(spec) + ")");
    const auto name = spec.substr(0, colon);
    const auto args = spec.substr(colon + 1);
    if (name == "hamming") return hamming(static_cast<unsigned>(parse_uint(args)));
    if (name == "identity") return identity(parse_uint(args));
    if (name == "rs") {
      const auto comma = args.find(',');
      if (comma == std::string_view::npos) throw ConfigError("rs transform spec is rs:N,K");
      return reed_solomon(parse_uint(args.substr(0, comma)), parse_uint(args.substr(comma + 1)));
    }
    throw ConfigError("unknown transform '" + std::string(name) + "'");
  }

  TransformKind kind() const noexcept { return static_cast<TransformKind>(config_.index()); }

  std::string to_string() const {
    return std::visit(
        [](const auto& c) -> std::string {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, IdentityConfig>) {
            return "identity:" + std::to_string(c.chunk_bytes);
          } else if constexpr (std::is_same_v<C, HammingConfig>) {
            return "hamming:" + std::to_string(c.m);
          } else {
            return "rs:" + std::to_string(c.n) + "," + std::to_string(c.k);
          }
        },
        config_);
  }

  std::size_t chunk_bytes() const noexcept {
    return std::visit(
        [](const auto& c) -> std::size_t {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, IdentityConfig>) return c.chunk_bytes;
          else if constexpr (std::is_same_v<C, HammingConfig>) return c.chunk_bytes;
          else return c.n;
        },
        config_);
  }

  std::size_t basis_bytes() const noexcept {
    return std::visit(
        [](const auto& c) -> std::size_t {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, IdentityConfig>) return c.chunk_bytes;
          else if constexpr (std::is_same_v<C, HammingConfig>) return c.basis_bytes;
          else return c.k;
        },
        config_);
  }

  // Deviation bytes a fingerprint reduction may count on: exact for Hamming,
  // the upper bound for RS.
  std::size_t fixed_deviation_bytes() const noexcept {
    return std::visit(
        [](const auto& c) -> std::size_t {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, IdentityConfig>) return 0;
          else if constexpr (std::is_same_v<C, HammingConfig>) return c.dev_bytes;
          else return c.max_deviation_bytes();
        },
        config_);
  }

  // Length of the transform deviation at the front of `tail`.
  std::size_t deviation_length(ByteView tail) const {
    switch (kind()) {
      case TransformKind::identity:
        return 0;
      case TransformKind::hamming:
        return std::get<HammingConfig>(config_).dev_bytes;
      case TransformKind::reed_solomon:
        if (tail.empty()) throw CorruptDeviation("truncated reed-solomon deviation");
        return 1 + 2 * std::size_t{tail[0]};
    }
    return 0;
  }

  BasisDeviation split(ByteView chunk) const {
    switch (kind()) {
      case TransformKind::identity:
        if (chunk.size() != chunk_bytes()) throw ArgumentError("chunk length does not match transform");
        return {Bytes(chunk.begin(), chunk.end()), {}};
      case TransformKind::hamming:
        return hamming_transform(chunk, std::get<HammingConfig>(config_));
      case TransformKind::reed_solomon:
        return rs_transform(chunk, *rs_);
    }
    return {};
  }

  Bytes merge(const BasisDeviation& bd) const {
    switch (kind()) {
      case TransformKind::identity:
        if (!bd.deviation.empty()) throw CorruptDeviation("identity transform carries no deviation");
        if (bd.basis.size() != chunk_bytes()) throw ArgumentError("basis length does not match transform");
        return bd.basis;
      case TransformKind::hamming:
        return hamming_reconstruct(bd, std::get<HammingConfig>(config_));
      case TransformKind::reed_solomon:
        if (bd.basis.size() != basis_bytes()) throw ArgumentError("basis length does not match transform");
        return rs_reconstruct(bd, *rs_);
    }
    return {};
  }

  const HammingConfig* hamming_config() const noexcept { return std::get_if<HammingConfig>(&config_); }
  const RsConfig* rs_config() const noexcept { return std::get_if<RsConfig>(&config_); }

  friend bool operator==(const Transform& a, const Transform& b) { return a.config_ == b.config_; }

 private:
  using Config = std::variant<IdentityConfig, HammingConfig, RsConfig>;

  explicit Transform(Config cfg) : config_(std::move(cfg)) {
    if (const auto* rs = std::get_if<RsConfig>(&config_)) rs_ = std::make_shared<const ReedSolomon>(*rs);
  }

  static std::size_t parse_uint(std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("expected an unsigned integer, got '" + std::string(s) + "'");
    }
    return v;
  }

  Config config_;
  std::shared_ptr<const ReedSolomon> rs_;  // immutable tables, shared between copies
};

}  // namespace hermes::ecc

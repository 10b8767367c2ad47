#pragma once

#include <openssl/evp.h>
#include <zlib.h>

#include <charconv>
#include <optional>
#include <string>
#include <string_view>

#include "hermes/bytes.hpp"
#include "hermes/ecc/basis_deviation.hpp"
#include "hermes/error.hpp"

namespace hermes {

enum class FingerprintAlgorithm : std::uint8_t { crc32 = 0, sha1 = 1, sha256 = 2 };

inline std::size_t digest_length(FingerprintAlgorithm a) noexcept {
  switch (a) {
    case FingerprintAlgorithm::crc32: return 4;
    case FingerprintAlgorithm::sha1: return 20;
    case FingerprintAlgorithm::sha256: return 32;
  }
  return 0;
}

inline std::string to_string(FingerprintAlgorithm a) {
  switch (a) {
    case FingerprintAlgorithm::crc32: return "crc32";
    case FingerprintAlgorithm::sha1: return "sha1";
    case FingerprintAlgorithm::sha256: return "sha256";
  }
  return "?";
}

// Every node of a deployment must share one of these.
struct FingerprintConfig {
  FingerprintAlgorithm algorithm = FingerprintAlgorithm::crc32;
  std::size_t length = 4;  // h_B, bytes kept from the front of the digest

  friend bool operator==(const FingerprintConfig&, const FingerprintConfig&) = default;
};

inline FingerprintConfig make_fingerprint_config(FingerprintAlgorithm a, std::size_t length) {
  if (length < 1 || length > digest_length(a)) {
    throw ConfigError(to_string(a) + " fingerprints must be 1.." + std::to_string(digest_length(a)) + " bytes");
  }
  return {a, length};
}

// "crc32:4", "sha1:6", ... The length defaults to the full digest.
inline FingerprintConfig parse_fingerprint_config(std::string_view spec) {
  const auto colon = spec.find(':');
  const auto name = spec.substr(0, colon);
  FingerprintAlgorithm algo;
  if (name == "crc32") algo = FingerprintAlgorithm::crc32;
  else if (name == "sha1") algo = FingerprintAlgorithm::sha1;
  else if (name == "sha256") algo = FingerprintAlgorithm::sha256;
  else throw ConfigError("unknown fingerprint algorithm '" + std::string(name) + "'");
  std::size_t len = digest_length(algo);
  if (colon != std::string_view::npos) {
    const auto arg = spec.substr(colon + 1);
    const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), len);
    if (ec != std::errc{} || ptr != arg.data() + arg.size()) throw ConfigError("bad fingerprint length");
  }
  return make_fingerprint_config(algo, len);
}

inline std::string to_string(const FingerprintConfig& c) {
  return to_string(c.algorithm) + ":" + std::to_string(c.length);
}

// Untruncated digest. CRC-32 is emitted big-endian.
inline Bytes digest(ByteView data, FingerprintAlgorithm algo) {
  if (algo == FingerprintAlgorithm::crc32) {
    const auto crc = ::crc32(0L, data.data(), static_cast<uInt>(data.size()));
    Bytes out;
    put_be(out, static_cast<std::uint32_t>(crc));
    return out;
  }
  const EVP_MD* md = algo == FingerprintAlgorithm::sha1 ? EVP_sha1() : EVP_sha256();
  Bytes out(digest_length(algo));
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1) {
    throw Error("digest computation failed");
  }
  out.resize(len);
  return out;
}

inline Bytes fingerprint(ByteView data, const FingerprintConfig& cfg, std::size_t length) {
  Bytes d = digest(data, cfg.algorithm);
  d.resize(length);
  return d;
}

inline Bytes fingerprint(ByteView data, const FingerprintConfig& cfg) {
  return fingerprint(data, cfg, cfg.length);
}

enum class Scheme : std::uint8_t { dd = 0, gd_vanilla = 1, gd_reduced = 2, gd_dual = 3 };

inline Scheme parse_scheme(std::string_view s) {
  if (s == "dd") return Scheme::dd;
  if (s == "gd-vanilla") return Scheme::gd_vanilla;
  if (s == "gd-reduced") return Scheme::gd_reduced;
  if (s == "gd-dual") return Scheme::gd_dual;
  throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::dd: return "dd";
    case Scheme::gd_vanilla: return "gd-vanilla";
    case Scheme::gd_reduced: return "gd-reduced";
    case Scheme::gd_dual: return "gd-dual";
  }
  return "?";
}

inline constexpr Scheme kAllSchemes[] = {Scheme::dd, Scheme::gd_vanilla, Scheme::gd_reduced, Scheme::gd_dual};

// Fingerprint byte lengths a scheme puts on the wire.
struct IdentifierLayout {
  std::size_t primary = 0;
  std::size_t secondary = 0;  // GD-dual basis fingerprint, zero otherwise

  std::size_t total() const noexcept { return primary + secondary; }
};

// `reduction` is the fixed deviation size GD-reduced trades fingerprint
// bytes for.
inline IdentifierLayout identifier_layout(Scheme scheme, const FingerprintConfig& cfg, std::size_t reduction) {
  switch (scheme) {
    case Scheme::dd:
    case Scheme::gd_vanilla:
      return {cfg.length, 0};
    case Scheme::gd_reduced:
      if (reduction >= cfg.length) {
        throw ConfigError("gd-reduced: deviation of " + std::to_string(reduction) +
                          " bytes leaves no room in a " + std::to_string(cfg.length) + "-byte fingerprint");
      }
      return {cfg.length - reduction, 0};
    case Scheme::gd_dual:
      if (cfg.length < 2) throw ConfigError("gd-dual needs a fingerprint of at least 2 bytes");
      return {cfg.length / 2, (cfg.length + 1) / 2};
  }
  return {};
}

struct SchemeIdentifiers {
  Scheme scheme = Scheme::dd;
  Bytes primary;                   // f(chunk) for DD and GD-dual, f(basis) otherwise
  std::optional<Bytes> secondary;  // GD-dual: f(basis)
  std::optional<Bytes> deviation;  // absent for DD

  friend bool operator==(const SchemeIdentifiers&, const SchemeIdentifiers&) = default;
};

inline SchemeIdentifiers derive_identifiers(ByteView chunk, const ecc::BasisDeviation& bd, Scheme scheme,
                                            const FingerprintConfig& cfg, std::size_t reduction) {
  const auto layout = identifier_layout(scheme, cfg, reduction);
  SchemeIdentifiers ids;
  ids.scheme = scheme;
  switch (scheme) {
    case Scheme::dd:
      ids.primary = fingerprint(chunk, cfg, layout.primary);
      break;
    case Scheme::gd_vanilla:
    case Scheme::gd_reduced:
      ids.primary = fingerprint(bd.basis, cfg, layout.primary);
      ids.deviation = bd.deviation;
      break;
    case Scheme::gd_dual:
      ids.primary = fingerprint(chunk, cfg, layout.primary);
      ids.secondary = fingerprint(bd.basis, cfg, layout.secondary);
      ids.deviation = bd.deviation;
      break;
  }
  return ids;
}

}  // namespace hermes

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hermes/bytes.hpp"
#include "hermes/ecc/basis_deviation.hpp"
#include "hermes/ecc/gf256.hpp"
#include "hermes/error.hpp"

namespace hermes::ecc {

// Shortened systematic Reed-Solomon code RS_256(n_B, k_B).
//
// Codeword byte 0 is the highest-degree coefficient; the message occupies
// bytes [0, k_B) and parity bytes [k_B, n_B). The generator has roots
// alpha^0 .. alpha^(n_B - k_B - 1).
struct RsConfig {
  std::size_t n = 0;  // codeword symbols (bytes)
  std::size_t k = 0;  // message symbols
  std::size_t t = 0;  // floor((n - k) / 2)
  std::optional<unsigned> covering_radius;

  std::size_t parity() const noexcept { return n - k; }

  // Largest deviation the transform can emit: count byte plus one
  // (position, value) pair per parity symbol in the fallback split.
  std::size_t max_deviation_bytes() const noexcept { return 1 + 2 * std::max(t, parity()); }

  friend bool operator==(const RsConfig&, const RsConfig&) = default;
};

// Known covering radii R(C) for a few codes.
inline std::optional<unsigned> rs_covering_radius(std::size_t n, std::size_t k) {
  struct Entry {
    std::size_t n, k;
    unsigned radius;
  };
  static constexpr Entry table[] = {{16, 14, 2}, {255, 253, 2}, {255, 247, 8}, {64, 56, 11}};
  for (const auto& e : table) {
    if (e.n == n && e.k == k) return e.radius;
  }
  return std::nullopt;
}

// Worst-case deviation size in bits when the covering radius is known:
// R * ceil(log2 n) location bits plus R * 8 value bits.
inline std::optional<std::size_t> rs_worst_case_deviation_bits(const RsConfig& cfg) {
  if (!cfg.covering_radius) return std::nullopt;
  std::size_t loc_bits = 0;
  while ((std::size_t{1} << loc_bits) < cfg.n) ++loc_bits;
  return std::size_t{*cfg.covering_radius} * loc_bits + std::size_t{*cfg.covering_radius} * 8;
}

inline RsConfig rs_params(std::size_t n, std::size_t k) {
  if (k < 1 || k >= n || n > 255) {
    throw ConfigError("reed-solomon code needs 1 <= k < n <= 255, got (" + std::to_string(n) + ", " +
                      std::to_string(k) + ")");
  }
  RsConfig cfg;
  cfg.n = n;
  cfg.k = k;
  cfg.t = (n - k) / 2;
  cfg.covering_radius = rs_covering_radius(n, k);
  return cfg;
}

class ReedSolomon {
 public:
  explicit ReedSolomon(const RsConfig& cfg) : cfg_(cfg) {
    // High-degree-first generator, monic.
    generator_.assign(1, 1);
    for (std::size_t i = 0; i < cfg_.parity(); ++i) {
      const std::uint8_t root = gf256::pow_alpha(static_cast<unsigned>(i));
      std::vector<std::uint8_t> next(generator_.size() + 1, 0);
      for (std::size_t j = 0; j < generator_.size(); ++j) {
        next[j] ^= generator_[j];
        next[j + 1] ^= gf256::mul(root, generator_[j]);
      }
      generator_ = std::move(next);
    }
  }

  const RsConfig& config() const noexcept { return cfg_; }

  Bytes encode(ByteView message) const {
    if (message.size() != cfg_.k) {
      throw ArgumentError("reed-solomon message must be " + std::to_string(cfg_.k) + " bytes");
    }
    const std::size_t np = cfg_.parity();
    std::vector<std::uint8_t> parity(np, 0);
    for (auto symbol : message) {
      const std::uint8_t feedback = symbol ^ parity[0];
      std::copy(parity.begin() + 1, parity.end(), parity.begin());
      parity[np - 1] = 0;
      if (feedback != 0) {
        for (std::size_t j = 0; j < np; ++j) parity[j] ^= gf256::mul(feedback, generator_[j + 1]);
      }
    }
    Bytes out(message.begin(), message.end());
    out.insert(out.end(), parity.begin(), parity.end());
    return out;
  }

  std::vector<std::uint8_t> syndromes(ByteView word) const {
    std::vector<std::uint8_t> s(cfg_.parity(), 0);
    for (std::size_t j = 0; j < s.size(); ++j) {
      const std::uint8_t a = gf256::pow_alpha(static_cast<unsigned>(j));
      std::uint8_t acc = 0;
      for (auto c : word) acc = gf256::mul(acc, a) ^ c;
      s[j] = acc;
    }
    return s;
  }

  // Bounded-distance decoding (at most t symbol errors). Returns the
  // corrected codeword, or nullopt when the word lies outside every
  // decoding sphere.
  std::optional<Bytes> decode(ByteView word) const {
    const auto synd = syndromes(word);
    if (std::all_of(synd.begin(), synd.end(), [](auto v) { return v == 0; })) {
      return Bytes(word.begin(), word.end());
    }
    if (cfg_.t == 0) return std::nullopt;

    // Berlekamp-Massey, low-degree-first polynomials.
    std::vector<std::uint8_t> lambda{1}, prev{1};
    std::size_t len = 0, shift = 1;
    std::uint8_t prev_disc = 1;
    for (std::size_t r = 0; r < synd.size(); ++r) {
      std::uint8_t disc = synd[r];
      for (std::size_t i = 1; i <= len && i < lambda.size(); ++i) disc ^= gf256::mul(lambda[i], synd[r - i]);
      if (disc == 0) {
        ++shift;
        continue;
      }
      const std::uint8_t coef = gf256::div(disc, prev_disc);
      std::vector<std::uint8_t> updated = lambda;
      if (updated.size() < prev.size() + shift) updated.resize(prev.size() + shift, 0);
      for (std::size_t i = 0; i < prev.size(); ++i) updated[i + shift] ^= gf256::mul(coef, prev[i]);
      if (2 * len <= r) {
        prev = lambda;
        len = r + 1 - len;
        prev_disc = disc;
        shift = 1;
      } else {
        ++shift;
      }
      lambda = std::move(updated);
    }
    while (lambda.size() > 1 && lambda.back() == 0) lambda.pop_back();
    if (len > cfg_.t || lambda.size() - 1 != len) return std::nullopt;

    // Error evaluator omega = S(x) * lambda(x) mod x^(n - k).
    std::vector<std::uint8_t> omega(synd.size(), 0);
    for (std::size_t i = 0; i < synd.size(); ++i) {
      for (std::size_t j = 0; j < lambda.size() && i + j < omega.size(); ++j) {
        omega[i + j] ^= gf256::mul(synd[i], lambda[j]);
      }
    }

    Bytes corrected(word.begin(), word.end());
    std::size_t found = 0;
    for (std::size_t pos = 0; pos < cfg_.n; ++pos) {
      const unsigned degree = static_cast<unsigned>(cfg_.n - 1 - pos);
      const std::uint8_t x = gf256::pow_alpha(degree);
      const std::uint8_t x_inv = gf256::pow_alpha(255 - degree % 255);
      if (eval(lambda, x_inv) != 0) continue;
      // Formal derivative keeps odd-degree terms only.
      std::uint8_t deriv = 0;
      std::uint8_t xp = 1;
      const std::uint8_t x_inv_sq = gf256::mul(x_inv, x_inv);
      for (std::size_t i = 1; i < lambda.size(); i += 2) {
        deriv ^= gf256::mul(lambda[i], xp);
        xp = gf256::mul(xp, x_inv_sq);
      }
      if (deriv == 0) return std::nullopt;
      const std::uint8_t magnitude = gf256::mul(x, gf256::div(eval(omega, x_inv), deriv));
      corrected[pos] ^= magnitude;
      ++found;
    }
    if (found != len) return std::nullopt;
    const auto check = syndromes(corrected);
    if (!std::all_of(check.begin(), check.end(), [](auto v) { return v == 0; })) return std::nullopt;
    return corrected;
  }

 private:
  static std::uint8_t eval(const std::vector<std::uint8_t>& poly, std::uint8_t x) {
    std::uint8_t acc = 0;
    for (std::size_t i = poly.size(); i-- > 0;) acc = gf256::mul(acc, x) ^ poly[i];
    return acc;
  }

  RsConfig cfg_;
  std::vector<std::uint8_t> generator_;
};

// Deviation wire form: count byte, then (position, value) pairs sorted by
// position, covering every nonzero symbol of chunk XOR encode(basis).
inline Bytes rs_serialize_deviation(ByteView chunk, ByteView reencoded) {
  Bytes dev{0};
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    const std::uint8_t diff = chunk[i] ^ reencoded[i];
    if (diff != 0) {
      dev.push_back(static_cast<std::uint8_t>(i));
      dev.push_back(diff);
      ++dev[0];
    }
  }
  return dev;
}

inline BasisDeviation rs_transform(ByteView chunk, const ReedSolomon& code) {
  const auto& cfg = code.config();
  if (chunk.size() != cfg.n) {
    throw ArgumentError("reed-solomon chunk must be " + std::to_string(cfg.n) + " bytes");
  }
  BasisDeviation bd;
  if (auto decoded = code.decode(chunk)) {
    bd.basis.assign(decoded->begin(), decoded->begin() + static_cast<std::ptrdiff_t>(cfg.k));
    bd.deviation = rs_serialize_deviation(chunk, *decoded);
    return bd;
  }
  // Beyond the decoding radius: systematic split, deviation confined to parity.
  bd.basis.assign(chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(cfg.k));
  bd.deviation = rs_serialize_deviation(chunk, code.encode(bd.basis));
  return bd;
}

inline BasisDeviation rs_transform(ByteView chunk, const RsConfig& cfg) {
  return rs_transform(chunk, ReedSolomon(cfg));
}

inline Bytes rs_reconstruct(const BasisDeviation& bd, const ReedSolomon& code) {
  const auto& cfg = code.config();
  const auto& dev = bd.deviation;
  if (dev.empty()) throw CorruptDeviation("reed-solomon deviation is missing its count byte");
  const std::size_t count = dev[0];
  if (dev.size() != 1 + 2 * count) throw CorruptDeviation("reed-solomon deviation length mismatch");
  Bytes chunk = code.encode(bd.basis);
  int last = -1;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t pos = dev[1 + 2 * i];
    const std::uint8_t value = dev[2 + 2 * i];
    if (pos >= cfg.n) throw CorruptDeviation("reed-solomon deviation position out of range");
    if (static_cast<int>(pos) <= last) throw CorruptDeviation("reed-solomon deviation positions not increasing");
    if (value == 0) throw CorruptDeviation("reed-solomon deviation carries a zero symbol");
    last = static_cast<int>(pos);
    chunk[pos] ^= value;
  }
  return chunk;
}

inline Bytes rs_reconstruct(const BasisDeviation& bd, const RsConfig& cfg) {
  return rs_reconstruct(bd, ReedSolomon(cfg));
}

}  // namespace hermes::ecc

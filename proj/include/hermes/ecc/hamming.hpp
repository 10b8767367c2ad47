#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>

#include "hermes/bytes.hpp"
#include "hermes/ecc/basis_deviation.hpp"
#include "hermes/error.hpp"

namespace hermes::ecc {

// Binary Hamming code with m parity bits applied to chunks of n + 1 bits.
//
// Bit positions 1..n of the chunk (MSB-first) form the codeword; column i of
// the parity-check matrix is the binary expansion of i, so a syndrome value
// is directly the 1-based position of the single flipped bit. Parity bits
// sit at the power-of-two positions, message bits everywhere else in
// ascending order. The trailing bit n + 1 is carried in the deviation.
struct HammingConfig {
  unsigned m = 0;
  std::size_t n = 0;            // codeword bits
  std::size_t k = 0;            // message bits
  std::size_t chunk_bytes = 0;  // (n + 1) / 8
  std::size_t basis_bytes = 0;  // ceil(k / 8)
  unsigned dev_bits = 0;        // m + 1
  std::size_t dev_bytes = 0;    // ceil((m + 1) / 8)

  friend bool operator==(const HammingConfig&, const HammingConfig&) = default;
};

inline constexpr unsigned kMinHammingParity = 3;
inline constexpr unsigned kMaxHammingParity = 15;

inline HammingConfig hamming_params(unsigned m) {
  if (m < kMinHammingParity || m > kMaxHammingParity) {
    throw ConfigError("hamming parity bits must be in [3, 15], got " + std::to_string(m));
  }
  HammingConfig cfg;
  cfg.m = m;
  cfg.n = (std::size_t{1} << m) - 1;
  cfg.k = cfg.n - m;
  cfg.chunk_bytes = (cfg.n + 1) / 8;
  cfg.basis_bytes = bytes_for_bits(cfg.k);
  cfg.dev_bits = m + 1;
  cfg.dev_bytes = bytes_for_bits(cfg.dev_bits);
  return cfg;
}

namespace detail {

inline bool is_parity_position(std::size_t pos) noexcept { return std::has_single_bit(pos); }

// Index of a message bit inside the basis, for a non-power-of-two position.
inline std::size_t message_index(std::size_t pos) noexcept {
  return pos - 2 - static_cast<std::size_t>(std::bit_width(pos) - 1);
}

// XOR of the in-byte indices (0 = MSB) of the set bits of every byte value.
inline constexpr std::array<std::uint8_t, 256> kBitIndexXor = [] {
  std::array<std::uint8_t, 256> t{};
  for (unsigned v = 0; v < 256; ++v) {
    for (unsigned b = 0; b < 8; ++b) {
      if (v & (0x80U >> b)) t[v] ^= static_cast<std::uint8_t>(b);
    }
  }
  return t;
}();

// XOR of the positions of all set bits among 1..n, where bit index i sits at
// position i + 1 and n + 1 = 8 * chunk.size(). Shifting the chunk right by one
// bit lines position p up with bit p, so each byte contributes its index
// (when it has an odd number of set bits) XOR a table entry.
inline std::size_t syndrome_of(ByteView chunk, std::size_t n) noexcept {
  std::size_t s = 0;
  unsigned prev = 0;
  const std::size_t bytes = (n + 1) / 8;
  for (std::size_t i = 0; i < bytes; ++i) {
    const unsigned cur = chunk[i];
    const unsigned shifted = ((prev & 1U) << 7) | (cur >> 1);
    prev = cur;
    if (std::popcount(shifted) & 1) s ^= i << 3;
    s ^= kBitIndexXor[shifted];
  }
  return s;
}

// The 8 bits starting at bit `off` (bits past the end read as zero).
inline std::uint8_t byte_at(ByteView src, std::size_t off) noexcept {
  const std::size_t i = off >> 3;
  const unsigned sh = off & 7;
  if (sh == 0) return src[i];
  const unsigned next = i + 1 < src.size() ? src[i + 1] : 0U;
  return static_cast<std::uint8_t>((src[i] << sh) | (next >> (8 - sh)));
}

// Copies `len` bits from src[src_off..] to dst[dst_off..].
inline void copy_bits(ByteView src, std::size_t src_off, std::span<std::uint8_t> dst,
                      std::size_t dst_off, std::size_t len) noexcept {
  while (len > 0 && (dst_off & 7) != 0) {
    set_bit(dst, dst_off++, get_bit(src, src_off++));
    --len;
  }
  for (; len >= 8; len -= 8, src_off += 8, dst_off += 8) dst[dst_off >> 3] = byte_at(src, src_off);
  while (len-- > 0) set_bit(dst, dst_off++, get_bit(src, src_off++));
}

}  // namespace detail

// Error-free (n + 1)-bit chunk for a basis, with the trailing bit cleared.
inline Bytes hamming_encode(ByteView basis, const HammingConfig& cfg) {
  if (basis.size() != cfg.basis_bytes) {
    throw ArgumentError("hamming basis must be " + std::to_string(cfg.basis_bytes) + " bytes");
  }
  Bytes chunk(cfg.chunk_bytes, 0);
  // Message bits fill the runs between consecutive powers of two.
  std::size_t msg = 0;
  for (unsigned j = 1; j < cfg.m; ++j) {
    const std::size_t first = (std::size_t{1} << j) + 1;
    const std::size_t last = (std::size_t{1} << (j + 1)) - 1;
    const std::size_t run = last - first + 1;
    detail::copy_bits(basis, msg, chunk, first - 1, run);
    msg += run;
  }
  const std::size_t s = detail::syndrome_of(chunk, cfg.n);
  for (unsigned j = 0; j < cfg.m; ++j) {
    if ((s >> j) & 1U) set_bit(chunk, (std::size_t{1} << j) - 1, true);
  }
  return chunk;
}

inline BasisDeviation hamming_transform(ByteView chunk, const HammingConfig& cfg) {
  if (chunk.size() != cfg.chunk_bytes) {
    throw ArgumentError("hamming chunk must be " + std::to_string(cfg.chunk_bytes) + " bytes");
  }
  const std::size_t s = detail::syndrome_of(chunk, cfg.n);
  BasisDeviation bd;
  bd.basis.assign(cfg.basis_bytes, 0);
  std::size_t msg = 0;
  for (unsigned j = 1; j < cfg.m; ++j) {
    const std::size_t first = (std::size_t{1} << j) + 1;
    const std::size_t run = (std::size_t{1} << j) - 1;
    detail::copy_bits(chunk, first - 1, bd.basis, msg, run);
    msg += run;
  }
  if (s != 0 && !detail::is_parity_position(s)) flip_bit(bd.basis, detail::message_index(s));

  const bool extra = get_bit(chunk, cfg.n);
  const std::uint32_t dev = static_cast<std::uint32_t>(s) | (static_cast<std::uint32_t>(extra) << cfg.m);
  for (std::size_t i = 0; i < cfg.dev_bytes; ++i) {
    bd.deviation.push_back(static_cast<std::uint8_t>(dev >> (8 * i)));
  }
  return bd;
}

inline Bytes hamming_reconstruct(const BasisDeviation& bd, const HammingConfig& cfg) {
  if (bd.deviation.size() != cfg.dev_bytes) {
    throw CorruptDeviation("hamming deviation must be " + std::to_string(cfg.dev_bytes) + " bytes");
  }
  std::uint32_t dev = 0;
  for (std::size_t i = 0; i < cfg.dev_bytes; ++i) dev |= std::uint32_t{bd.deviation[i]} << (8 * i);
  if ((dev >> cfg.dev_bits) != 0) throw CorruptDeviation("hamming deviation has bits above m + 1");
  const std::size_t s = dev & ((std::uint32_t{1} << cfg.m) - 1);
  if (s > cfg.n) throw CorruptDeviation("hamming syndrome exceeds codeword length");
  // Basis padding bits must be clear; otherwise two bases would share a chunk.
  for (std::size_t idx = cfg.k; idx < cfg.basis_bytes * 8; ++idx) {
    if (get_bit(bd.basis, idx)) throw CorruptInput("hamming basis has nonzero padding bits");
  }
  Bytes chunk = hamming_encode(bd.basis, cfg);
  if (s != 0) flip_bit(chunk, s - 1);
  set_bit(chunk, cfg.n, ((dev >> cfg.m) & 1U) != 0);
  return chunk;
}

}  // namespace hermes::ecc

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hermes {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Bit-level view of a byte string: bit 0 is the MSB of byte 0.
inline bool get_bit(ByteView data, std::size_t index) noexcept {
  return (data[index >> 3] >> (7 - (index & 7))) & 1U;
}

inline void set_bit(std::span<std::uint8_t> data, std::size_t index, bool value) noexcept {
  const auto mask = static_cast<std::uint8_t>(0x80U >> (index & 7));
  if (value) {
    data[index >> 3] |= mask;
  } else {
    data[index >> 3] &= static_cast<std::uint8_t>(~mask);
  }
}

inline void flip_bit(std::span<std::uint8_t> data, std::size_t index) noexcept {
  data[index >> 3] ^= static_cast<std::uint8_t>(0x80U >> (index & 7));
}

inline std::size_t bytes_for_bits(std::size_t bits) noexcept { return (bits + 7) / 8; }

// Big-endian integer helpers used by every on-disk and on-wire format.
template <typename T>
void put_be(Bytes& out, T value, std::size_t width = sizeof(T)) {
  for (std::size_t i = width; i-- > 0;) {
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
  }
}

inline std::uint64_t get_be(ByteView in, std::size_t width) noexcept {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v = (v << 8) | in[i];
  return v;
}

inline void append(Bytes& out, ByteView tail) { out.insert(out.end(), tail.begin(), tail.end()); }

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_hex(ByteView data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

inline std::string key_of(ByteView data) { return {data.begin(), data.end()}; }

}  // namespace hermes

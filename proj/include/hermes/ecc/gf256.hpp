#pragma once

#include <array>
#include <cstdint>

namespace hermes::ecc::gf256 {

// GF(2^8) generated by the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1.
inline constexpr unsigned kPrimitive = 0x11D;

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<std::uint8_t, 256> log{};
};

inline constexpr Tables make_tables() {
  Tables t;
  unsigned x = 1;
  for (unsigned i = 0; i < 255; ++i) {
    t.exp[i] = static_cast<std::uint8_t>(x);
    t.log[x] = static_cast<std::uint8_t>(i);
    x <<= 1;
    if (x & 0x100U) x ^= kPrimitive;
  }
  for (unsigned i = 255; i < 512; ++i) t.exp[i] = t.exp[i - 255];
  return t;
}

inline constexpr Tables kTables = make_tables();

inline constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) noexcept { return a ^ b; }

inline constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) noexcept {
  if (a == 0 || b == 0) return 0;
  return kTables.exp[kTables.log[a] + kTables.log[b]];
}

// b must be nonzero.
inline constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) noexcept {
  if (a == 0) return 0;
  return kTables.exp[kTables.log[a] + 255 - kTables.log[b]];
}

inline constexpr std::uint8_t inv(std::uint8_t a) noexcept { return kTables.exp[255 - kTables.log[a]]; }

// alpha^e for any non-negative exponent.
inline constexpr std::uint8_t pow_alpha(unsigned e) noexcept { return kTables.exp[e % 255]; }

}  // namespace hermes::ecc::gf256

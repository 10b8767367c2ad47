#include <gtest/gtest.h>

#include <random>

#include "hermes/ecc/transform.hpp"
#include "hermes/engine/codec.hpp"
#include "hermes/fingerprint.hpp"

namespace hermes {
namespace {

// Bitwise reflected CRC-32 (poly 0xEDB88320), independent of zlib.
std::uint32_t reference_crc32(ByteView data) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (auto b : data) {
    crc ^= b;
    for (int i = 0; i < 8; ++i) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

Bytes from_hex(std::string_view hex) {
  Bytes out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoul(std::string(hex.substr(i, 2)), nullptr, 16)));
  }
  return out;
}

TEST(Fingerprint, Crc32CheckValues) {
  const auto cfg = make_fingerprint_config(FingerprintAlgorithm::crc32, 4);
  EXPECT_EQ(fingerprint(Bytes{}, cfg), (Bytes{0, 0, 0, 0}));
  EXPECT_EQ(fingerprint(to_bytes("123456789"), cfg), (Bytes{0xCB, 0xF4, 0x39, 0x26}));
}

TEST(Fingerprint, Crc32MatchesBitwiseReference) {
  std::mt19937_64 rng(1);
  const auto cfg = make_fingerprint_config(FingerprintAlgorithm::crc32, 4);
  for (int i = 0; i < 500; ++i) {
    Bytes data(rng() % 300);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    Bytes expected;
    put_be(expected, reference_crc32(data));
    ASSERT_EQ(fingerprint(data, cfg), expected);
  }
}

TEST(Fingerprint, ShaTestVectorsTruncated) {
  const auto sha1_abc = from_hex("a9993e364706816aba3e25717850c26c9cd0d89d");
  const auto sha256_abc = from_hex("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(digest(to_bytes("abc"), FingerprintAlgorithm::sha1), sha1_abc);
  EXPECT_EQ(digest(to_bytes("abc"), FingerprintAlgorithm::sha256), sha256_abc);
  EXPECT_EQ(fingerprint(to_bytes("abc"), parse_fingerprint_config("sha1:6")), Bytes(sha1_abc.begin(), sha1_abc.begin() + 6));
}

TEST(Fingerprint, TruncationsSharePrefixes) {
  const auto data = to_bytes("sensor-frame");
  const auto full = fingerprint(data, parse_fingerprint_config("sha256"));
  for (std::size_t len = 1; len <= 32; ++len) {
    const auto t = fingerprint(data, parse_fingerprint_config("sha256:" + std::to_string(len)));
    EXPECT_TRUE(std::equal(t.begin(), t.end(), full.begin()));
  }
}

TEST(Fingerprint, ConfigParsing) {
  EXPECT_EQ(parse_fingerprint_config("crc32").length, 4u);
  EXPECT_EQ(parse_fingerprint_config("sha1:6").length, 6u);
  EXPECT_THROW(parse_fingerprint_config("crc32:5"), ConfigError);
  EXPECT_THROW(parse_fingerprint_config("sha1:0"), ConfigError);
  EXPECT_THROW(parse_fingerprint_config("md5:4"), ConfigError);
}

TEST(Identifiers, DdLayout) {
  const auto cfg = parse_fingerprint_config("sha1:6");
  const Bytes chunk(16, 3);
  const auto ids = derive_identifiers(chunk, {chunk, {}}, Scheme::dd, cfg, 0);
  EXPECT_EQ(ids.primary, fingerprint(chunk, cfg));
  EXPECT_FALSE(ids.deviation.has_value());
  EXPECT_FALSE(ids.secondary.has_value());
}

TEST(Identifiers, ReducedTradesFingerprintForDeviation) {
  const auto cfg = parse_fingerprint_config("sha1:6");
  const auto t = ecc::Transform::hamming(14);
  Bytes chunk(2048);
  std::mt19937_64 rng(3);
  for (auto& b : chunk) b = static_cast<std::uint8_t>(rng());
  const auto bd = t.split(chunk);
  const auto ids = derive_identifiers(chunk, bd, Scheme::gd_reduced, cfg, t.fixed_deviation_bytes());
  EXPECT_EQ(ids.primary.size(), 4u);
  EXPECT_EQ(ids.deviation->size(), 2u);
  EXPECT_EQ(ids.primary.size() + ids.deviation->size(), cfg.length);

  // The preprocessing tag rides along without shrinking the fingerprint further.
  const engine::ChunkCodec codec(engine::EngineConfig(t, Scheme::gd_reduced, cfg, preprocess::Mode::delta));
  const auto s = codec.split(chunk);
  EXPECT_EQ(s.ids.primary.size(), 4u);
  EXPECT_EQ(s.ids.deviation->size(), 3u);
}

TEST(Identifiers, ReducedRejectsOversizedDeviation) {
  const auto cfg = parse_fingerprint_config("crc32:4");
  EXPECT_THROW(identifier_layout(Scheme::gd_reduced, cfg, 4), ConfigError);
  EXPECT_THROW(identifier_layout(Scheme::gd_reduced, cfg, 5), ConfigError);
  EXPECT_EQ(identifier_layout(Scheme::gd_reduced, cfg, 3).primary, 1u);
}

TEST(Identifiers, DualSplitsFingerprintInHalves) {
  const auto cfg = parse_fingerprint_config("sha1:6");
  const auto t = ecc::Transform::hamming(7);
  const Bytes chunk(16, 0x5A);
  const auto bd = t.split(chunk);
  const auto ids = derive_identifiers(chunk, bd, Scheme::gd_dual, cfg, 0);
  EXPECT_EQ(ids.primary, fingerprint(chunk, cfg, 3));
  EXPECT_EQ(*ids.secondary, fingerprint(bd.basis, cfg, 3));
  EXPECT_EQ(ids.primary.size() + ids.secondary->size(), cfg.length);

  const auto odd = identifier_layout(Scheme::gd_dual, parse_fingerprint_config("sha1:7"), 0);
  EXPECT_EQ(odd.primary, 3u);
  EXPECT_EQ(odd.secondary, 4u);
}

TEST(Identifiers, CodecAgreesWithDerivation) {
  std::mt19937_64 rng(8);
  const auto cfg = parse_fingerprint_config("sha256:8");
  for (auto scheme : kAllSchemes) {
    const auto t = ecc::Transform::parse("rs:16,14");
    const engine::ChunkCodec codec(engine::EngineConfig(t, scheme, cfg));
    for (int i = 0; i < 50; ++i) {
      Bytes chunk(16);
      for (auto& b : chunk) b = static_cast<std::uint8_t>(rng());
      const auto bd = codec.transform().split(chunk);
      const auto expected = derive_identifiers(chunk, bd, scheme, cfg, codec.transform().fixed_deviation_bytes());
      EXPECT_EQ(codec.split(chunk).ids, expected) << to_string(scheme);
    }
  }
}

}  // namespace
}  // namespace hermes

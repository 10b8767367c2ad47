#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>
#include <thread>

#include "hermes/engine/engine.hpp"

namespace hermes::engine {
namespace {

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

EngineConfig config(std::string_view transform, Scheme scheme, std::string_view fp = "sha256:16",
                    preprocess::Mode mode = preprocess::Mode::none) {
  return EngineConfig(ecc::Transform::parse(transform), scheme, parse_fingerprint_config(fp), mode);
}

TEST(Chunker, ExactMultiple) {
  const auto c = split_into_chunks(Bytes(256, 1), 128);
  EXPECT_EQ(c.chunks.size(), 2u);
  EXPECT_EQ(c.original_length, 256u);
}

TEST(Chunker, PadsLastChunk) {
  const auto c = split_into_chunks(Bytes(130, 9), 128);
  ASSERT_EQ(c.chunks.size(), 2u);
  EXPECT_EQ(c.original_length, 130u);
  EXPECT_EQ(c.chunks[1][0], 9);
  EXPECT_EQ(c.chunks[1][1], 9);
  EXPECT_TRUE(std::all_of(c.chunks[1].begin() + 2, c.chunks[1].end(), [](auto b) { return b == 0; }));
}

TEST(Chunker, ReassemblyRoundtrip) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const Bytes data = random_bytes(rng, 1 + rng() % 1000);
    const std::size_t n = 1 + rng() % 64;
    const auto c = split_into_chunks(data, n);
    EXPECT_EQ(reassemble(c.chunks, c.original_length), data);

    StreamChunker sc(n);
    std::vector<Bytes> streamed;
    for (std::size_t off = 0; off < data.size();) {
      const std::size_t take = std::min<std::size_t>(1 + rng() % 50, data.size() - off);
      for (auto& ch : sc.push(ByteView(data).subspan(off, take))) streamed.push_back(std::move(ch));
      off += take;
    }
    if (auto last = sc.finish()) streamed.push_back(std::move(*last));
    EXPECT_EQ(streamed, c.chunks);
  }
}

TEST(Encoder, DdFirstAndRepeatedOccurrence) {
  Encoder enc(config("hamming:7", Scheme::dd, "sha1:6"));
  const Bytes chunk(16, 0x42);
  const auto first = enc.encode_chunk(chunk);
  EXPECT_EQ(first.ids.primary, fingerprint(chunk, parse_fingerprint_config("sha1:6")));
  ASSERT_TRUE(first.payload.has_value());
  EXPECT_EQ(*first.payload, chunk);
  const auto second = enc.encode_chunk(chunk);
  EXPECT_EQ(second.ids.primary, first.ids.primary);
  EXPECT_FALSE(second.payload.has_value());
}

TEST(Encoder, GdVanillaNeighbourSharesBasis) {
  const auto cfg = config("hamming:7", Scheme::gd_vanilla, "crc32:4");
  Encoder enc(cfg);
  const auto hc = ecc::hamming_params(7);
  std::mt19937_64 rng(12);
  Bytes basis = random_bytes(rng, hc.basis_bytes);
  for (std::size_t i = hc.k; i < hc.basis_bytes * 8; ++i) set_bit(basis, i, false);
  const Bytes a = ecc::hamming_encode(basis, hc);
  Bytes b = a;
  flip_bit(b, 40);
  ASSERT_NE(a, b);

  const auto ta = enc.encode_chunk(a);
  const auto tb = enc.encode_chunk(b);
  ASSERT_TRUE(ta.payload.has_value());
  EXPECT_EQ(*ta.payload, basis);
  EXPECT_FALSE(tb.payload.has_value());
  EXPECT_EQ(ta.ids.primary, tb.ids.primary);
  EXPECT_NE(*ta.ids.deviation, *tb.ids.deviation);

  Decoder dec(cfg);
  EXPECT_EQ(dec.decode_token(ta), a);
  EXPECT_EQ(dec.decode_token(tb), b);
}

TEST(Decoder, ErrorFreeBasisToken) {
  const auto cfg = config("hamming:7", Scheme::gd_vanilla, "crc32:4");
  const auto hc = ecc::hamming_params(7);
  const Bytes basis(hc.basis_bytes, 0);
  Token t;
  t.ids.scheme = Scheme::gd_vanilla;
  t.ids.primary = fingerprint(basis, cfg.fp);
  t.ids.deviation = Bytes{0};
  t.payload = basis;
  Decoder dec(cfg);
  EXPECT_EQ(dec.decode_token(t), ecc::hamming_encode(basis, hc));
}

TEST(Decoder, UnknownFingerprintWithoutPayload) {
  const auto cfg = config("hamming:7", Scheme::gd_vanilla, "crc32:4");
  Token t;
  t.ids.scheme = Scheme::gd_vanilla;
  t.ids.primary = Bytes{1, 2, 3, 4};
  t.ids.deviation = Bytes{0};
  Decoder dec(cfg);
  EXPECT_THROW(dec.decode_token(t), MissingBasis);
}

TEST(Decoder, PayloadMustMatchFingerprint) {
  const auto cfg = config("hamming:7", Scheme::gd_vanilla, "crc32:4");
  Encoder enc(cfg);
  auto t = enc.encode_chunk(Bytes(16, 7));
  (*t.payload)[0] ^= 1;
  Decoder dec(cfg);
  EXPECT_THROW(dec.decode_token(t), ValidationError);
  EXPECT_EQ(dec.sink().stores().primary->size(), 0u);
}

TEST(Decoder, DualRebuiltChunkIsVerified) {
  const auto cfg = config("hamming:7", Scheme::gd_dual, "sha1:6");
  Encoder enc(cfg);
  Decoder dec(cfg);
  const auto hc = ecc::hamming_params(7);
  const Bytes a = ecc::hamming_encode(Bytes(hc.basis_bytes, 0x11), hc);
  Bytes b = a;
  flip_bit(b, 3);
  const auto ta = enc.encode_chunk(a);
  auto tb = enc.encode_chunk(b);
  ASSERT_TRUE(ta.payload.has_value());
  ASSERT_FALSE(tb.payload.has_value());
  ASSERT_TRUE(tb.ids.deviation.has_value());
  EXPECT_EQ(dec.decode_token(ta), a);
  auto forged = tb;
  (*forged.ids.deviation)[0] ^= 0x01;
  EXPECT_THROW(dec.decode_token(forged), ValidationError);
  EXPECT_EQ(dec.decode_token(tb), b);
  // Exact repeat: identifiers only.
  const auto tc = enc.encode_chunk(b);
  EXPECT_FALSE(tc.payload.has_value());
  EXPECT_FALSE(tc.ids.deviation.has_value());
  EXPECT_EQ(dec.decode_token(tc), b);
}

struct Combo {
  std::string transform;
  Scheme scheme;
  preprocess::Mode mode;
};

std::vector<Combo> all_combos() {
  std::vector<Combo> out;
  for (const char* t : {"hamming:3", "hamming:5", "hamming:7", "hamming:10", "rs:16,14", "rs:255,253"}) {
    for (auto s : kAllSchemes) {
      for (auto m : {preprocess::Mode::none, preprocess::Mode::delta, preprocess::Mode::offset}) {
        out.push_back({t, s, m});
      }
    }
  }
  return out;
}

TEST(Engine, StreamRoundtripEveryCombination) {
  std::mt19937_64 rng(77);
  for (const auto& combo : all_combos()) {
    const auto cfg = config(combo.transform, combo.scheme, "sha256:16", combo.mode);
    Encoder enc(cfg);
    Decoder dec(cfg);
    const std::size_t n = cfg.chunk_bytes();
    for (int round = 0; round < 20; ++round) {
      // Repeats and near-repeats so every token kind shows up.
      Bytes data = random_bytes(rng, n * (1 + rng() % 6) + rng() % n);
      const Bytes copy = data;
      append(data, copy);
      if (!data.empty()) data[rng() % data.size()] ^= 0x10;
      const auto encoded = encode_stream(data, enc);
      ASSERT_EQ(decode_stream(encoded, dec), data)
          << combo.transform << " " << to_string(combo.scheme) << " " << preprocess::to_string(combo.mode);
    }
  }
}

TEST(Engine, TokenSerializationRoundtrip) {
  std::mt19937_64 rng(5);
  for (const auto& combo : all_combos()) {
    const auto cfg = config(combo.transform, combo.scheme, "sha1:12", combo.mode);
    Encoder enc(cfg);
    const std::size_t n = cfg.chunk_bytes();
    Bytes data = random_bytes(rng, n * 4);
    append(data, Bytes(data));
    const auto encoded = encode_stream(data, enc);
    Bytes wire;
    for (const auto& t : encoded.tokens) serialize_token(t, wire);
    EXPECT_EQ(wire.size(), enc.stats().wire_bytes());
    std::size_t off = 0;
    for (const auto& t : encoded.tokens) {
      Token parsed;
      off += parse_token(ByteView(wire).subspan(off), enc.codec(), parsed);
      ASSERT_EQ(parsed, t);
    }
    EXPECT_EQ(off, wire.size());
  }
}

TEST(Engine, EachBasisPayloadSentOnce) {
  std::mt19937_64 rng(91);
  for (auto scheme : kAllSchemes) {
    const auto cfg = config("hamming:4", scheme, "sha256:16");
    Encoder enc(cfg);
    std::set<Bytes> payloads;
    const Bytes data = random_bytes(rng, 4000);  // 2-byte chunks: lots of repeats
    for (const auto& t : encode_stream(data, enc).tokens) {
      if (!t.payload) continue;
      EXPECT_TRUE(payloads.insert(*t.payload).second) << to_string(scheme);
    }
  }
}

TEST(Engine, GdMatchesAtLeastDdMatches) {
  std::mt19937_64 rng(19);
  for (const char* t : {"hamming:3", "hamming:4", "rs:16,14"}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Bytes data = random_bytes(rng, 2000 + rng() % 4000);
      Encoder dd(config(t, Scheme::dd));
      Encoder gd(config(t, Scheme::gd_vanilla));
      encode_stream(data, dd);
      encode_stream(data, gd);
      const auto dd_matches = dd.stats().chunks - dd.stats().payloads;
      const auto gd_matches = gd.stats().chunks - gd.stats().payloads;
      EXPECT_GE(gd_matches, dd_matches) << t;
    }
  }
}

TEST(Encoder, CollidingChunksTravelVerbatim) {
  // One-byte fingerprints collide quickly; colliding chunks go out whole.
  for (const auto scheme : kAllSchemes) {
    const auto cfg = config("hamming:7", scheme, scheme == Scheme::gd_dual || scheme == Scheme::gd_reduced ? "crc32:2" : "crc32:1");
    Encoder enc(cfg);
    Decoder dec(cfg);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 1000; ++i) {
      const Bytes chunk = random_bytes(rng, 16);
      const Token t = enc.encode_chunk(chunk);
      Bytes wire;
      serialize_token(t, wire);
      Token back;
      ASSERT_EQ(parse_token(wire, enc.codec(), back), wire.size());
      EXPECT_EQ(back, t);
      ASSERT_EQ(dec.decode_token(back), chunk) << to_string(scheme) << " chunk " << i;
    }
    EXPECT_GT(enc.collisions(), 0u) << to_string(scheme);
  }
}

TEST(Store, Capacity) {
  EXPECT_EQ(store_capacity(256, 4), 22369621u);
  EXPECT_EQ(store_capacity(1, 4), 87381u);
  EXPECT_THROW(store_capacity(0, 4), ArgumentError);
}

TEST(Store, InsertIfAbsentFirstWriterWins) {
  FingerprintStore store(2);
  const Bytes key{1, 2};
  EXPECT_EQ(store.insert_if_absent(key, Bytes{9}), InsertResult::inserted);
  EXPECT_EQ(store.insert_if_absent(key, Bytes{9}), InsertResult::duplicate);
  EXPECT_EQ(store.insert_if_absent(key, Bytes{8}), InsertResult::conflict);
  EXPECT_EQ(*store.find(key), Bytes{9});
  EXPECT_THROW(store.insert_if_absent(Bytes{1}, Bytes{1}), ArgumentError);
}

TEST(Store, ConcurrentInsertsBindOnce) {
  for (int round = 0; round < 20; ++round) {
    FingerprintStore store(4);
    const Bytes key{0xDE, 0xAD, 0xBE, 0xEF};
    std::atomic<int> winners{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        if (store.insert_if_absent(key, Bytes{static_cast<std::uint8_t>(t)}) == InsertResult::inserted) ++winners;
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(winners.load(), 1);
    EXPECT_EQ(store.size(), 1u);
  }
}

TEST(Store, ClaimsSerializeRequests) {
  FingerprintStore store(1);
  const Bytes key{7};
  EXPECT_EQ(store.claim(key, 1), ClaimResult::claimed);
  EXPECT_EQ(store.claim(key, 2), ClaimResult::pending);
  EXPECT_EQ(store.claim(key, 1), ClaimResult::pending);
  store.release_all(1);
  EXPECT_EQ(store.claim(key, 2), ClaimResult::claimed);
  store.insert_if_absent(key, Bytes{1});
  EXPECT_EQ(store.claim(key, 3), ClaimResult::bound);
}

TEST(Store, SnapshotRoundtripAndRestartSafety) {
  const auto path = (std::filesystem::temp_directory_path() / "hermes_store_test.bin").string();
  FingerprintStore a(3);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) a.insert_if_absent(random_bytes(rng, 3), random_bytes(rng, 1 + rng() % 40));
  a.save(path);

  FingerprintStore b(3);
  const Bytes pre_key{0, 0, 0};
  const Bytes pre_value{42};
  b.insert_if_absent(pre_key, pre_value);
  EXPECT_EQ(b.load(path), a.size() - (a.contains(pre_key) ? 1 : 0));
  EXPECT_EQ(*b.find(pre_key), pre_value);
  // Replaying the snapshot changes nothing.
  const auto before = b.payload_bytes();
  EXPECT_EQ(b.load(path), 0u);
  EXPECT_EQ(b.payload_bytes(), before);

  FingerprintStore wrong(4);
  EXPECT_THROW(wrong.load(path), ConfigError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace hermes::engine

#include <gtest/gtest.h>

#include <random>

#include "hermes/preprocess.hpp"

namespace hermes::preprocess {
namespace {

TEST(Delta, ReferenceSequence) {
  const Samples in{128, 127, 128};
  EXPECT_EQ(delta_encode(in), (Samples{128, -1, 1}));
  EXPECT_EQ(delta_decode(Samples{128, -1, 1}, make_layout(1)), in);
}

TEST(Delta, ConstantAndSingle) {
  EXPECT_EQ(delta_encode(Samples{9, 9, 9}), (Samples{9, 0, 0}));
  EXPECT_EQ(delta_decode(Samples{42}, make_layout(1)), Samples{42});
}

TEST(Delta, Errors) {
  EXPECT_THROW(delta_encode(Samples{}), ArgumentError);
  EXPECT_THROW(delta_decode(Samples{}, make_layout(1)), ArgumentError);
  EXPECT_THROW(delta_decode(Samples{250, 10}, make_layout(1)), CorruptInput);
  EXPECT_THROW(delta_decode(Samples{3, -4}, make_layout(2)), CorruptInput);
}

TEST(Offset, ReferenceSequence) {
  const auto r = offset_remove(Samples{128, 127, 128});
  EXPECT_EQ(r.residuals, (Samples{1, 0, 1}));
  EXPECT_EQ(r.min_value, 127);
  EXPECT_EQ(offset_restore(r.residuals, r.min_value, make_layout(1)), (Samples{128, 127, 128}));
}

TEST(Offset, AllEqual) {
  const auto r = offset_remove(Samples{77, 77, 77, 77});
  EXPECT_EQ(r.residuals, (Samples{0, 0, 0, 0}));
  EXPECT_EQ(r.min_value, 77);
}

TEST(Offset, RestoreOverflowIsCorrupt) {
  EXPECT_THROW(offset_restore(Samples{200}, 100, make_layout(1)), CorruptInput);
  EXPECT_THROW(offset_restore(Samples{-1}, 100, make_layout(1)), CorruptInput);
}

TEST(Layout, OnlyStandardWidths) {
  EXPECT_THROW(make_layout(3), ConfigError);
  EXPECT_EQ(make_layout(4).max_value(), 0xFFFFFFFFLL);
}

class RoundtripByWidth : public ::testing::TestWithParam<unsigned> {};

TEST_P(RoundtripByWidth, RandomSequences) {
  const auto layout = make_layout(GetParam());
  std::mt19937_64 rng(GetParam());
  for (int i = 0; i < 10000; ++i) {
    const std::size_t len = 1 + rng() % 32;
    Samples s(len);
    for (auto& v : s) v = static_cast<std::int64_t>(rng() % (static_cast<std::uint64_t>(layout.max_value()) + 1));
    ASSERT_EQ(delta_decode(delta_encode(s), layout), s);
    const auto r = offset_remove(s);
    for (auto v : r.residuals) {
      ASSERT_GE(v, 0);
      ASSERT_LE(v, layout.max_value());
    }
    ASSERT_EQ(offset_restore(r.residuals, r.min_value, layout), s);
  }
}

INSTANTIATE_TEST_SUITE_P(Widths, RoundtripByWidth, ::testing::Values(1u, 2u, 4u));

TEST(ChunkLevel, OffsetCarriesTagAndMinimum) {
  const Bytes chunk{128, 127, 128, 130};
  const auto p = apply(chunk, Mode::offset, make_layout(1));
  EXPECT_EQ(p.body, (Bytes{1, 0, 1, 3}));
  EXPECT_EQ(p.extra, (Bytes{2, 127}));
  EXPECT_EQ(undo(p.body, p.extra, Mode::offset, make_layout(1)), chunk);
}

TEST(ChunkLevel, DeltaUsesTwosComplement) {
  const Bytes chunk{128, 127, 128, 128};
  const auto p = apply(chunk, Mode::delta, make_layout(1));
  EXPECT_EQ(p.body, (Bytes{128, 0xFF, 1, 0}));
  EXPECT_EQ(p.extra, Bytes{1});
  EXPECT_EQ(undo(p.body, p.extra, Mode::delta, make_layout(1)), chunk);
}

TEST(ChunkLevel, DeltaOverflowFallsBackToRaw) {
  const Bytes chunk{0, 200, 0, 0};
  const auto p = apply(chunk, Mode::delta, make_layout(1));
  EXPECT_EQ(p.body, chunk);
  EXPECT_EQ(p.extra, Bytes{0});
  EXPECT_EQ(undo(p.body, p.extra, Mode::delta, make_layout(1)), chunk);
}

TEST(ChunkLevel, RandomChunksRoundtripEveryMode) {
  std::mt19937_64 rng(31);
  for (unsigned w : {1u, 2u, 4u}) {
    const auto layout = make_layout(w);
    for (Mode mode : {Mode::none, Mode::delta, Mode::offset}) {
      for (int i = 0; i < 2000; ++i) {
        Bytes chunk(16);
        // Mix of smooth and noisy chunks so both delta branches run.
        const bool smooth = rng() % 2 == 0;
        const std::uint8_t base = static_cast<std::uint8_t>(rng());
        for (auto& b : chunk) b = smooth ? static_cast<std::uint8_t>(base + rng() % 3) : static_cast<std::uint8_t>(rng());
        const auto p = apply(chunk, mode, layout);
        ASSERT_EQ(p.extra.size(), extra_length(p.extra, mode, layout));
        ASSERT_EQ(undo(p.body, p.extra, mode, layout), chunk);
      }
    }
  }
}

TEST(ChunkLevel, PacketLocal) {
  // Same chunk, same output regardless of what was processed before.
  const Bytes a{5, 6, 7, 8}, b{200, 1, 9, 9};
  const auto first = apply(a, Mode::offset, make_layout(1));
  (void)apply(b, Mode::offset, make_layout(1));
  const auto again = apply(a, Mode::offset, make_layout(1));
  EXPECT_EQ(first.body, again.body);
  EXPECT_EQ(first.extra, again.extra);
}

TEST(ChunkLevel, MalformedExtra) {
  EXPECT_THROW(undo(Bytes{1}, Bytes{}, Mode::offset, make_layout(1)), CorruptDeviation);
  EXPECT_THROW(undo(Bytes{1}, Bytes{9}, Mode::offset, make_layout(1)), CorruptDeviation);
  EXPECT_THROW(undo(Bytes{1}, Bytes{2}, Mode::offset, make_layout(1)), CorruptDeviation);
  EXPECT_THROW(undo(Bytes{1}, Bytes{1}, Mode::none, make_layout(1)), CorruptDeviation);
}

}  // namespace
}  // namespace hermes::preprocess

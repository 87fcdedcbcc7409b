#include <gtest/gtest.h>

#include <array>
#include <set>

#include "ormachine/rng.hpp"

using namespace ormachine;

// Known-answer vectors from the Random123 distribution (kat_vectors, philox4x32_10).
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(Philox4x32::apply({0, 0, 0, 0}, {0, 0}),
            (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::apply({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterStream, SameKeySameSequence) {
  CounterStream a(42, 3, 17, 5);
  CounterStream b(42, 3, 17, 5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(CounterStream, DistinctKeysDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint32_t row = 0; row < 8; ++row)
    for (std::uint32_t sweep = 0; sweep < 8; ++sweep)
      for (std::uint32_t tag = 0; tag < 4; ++tag) firsts.insert(CounterStream(1, tag, row, sweep).next_u64());
  EXPECT_EQ(firsts.size(), 8u * 8u * 4u);
  EXPECT_NE(CounterStream(1, 0, 0, 0).next_u64(), CounterStream(2, 0, 0, 0).next_u64());
}

TEST(CounterStream, UniformMomentsAndRange) {
  CounterStream s(9, 0, 0, 0);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 0.002);
}

TEST(CounterStream, BelowIsInRangeAndCoversIt) {
  CounterStream s(5, 1, 2, 3);
  std::array<int, 7> counts{};
  for (int i = 0; i < 70000; ++i) {
    const auto v = s.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  EXPECT_EQ(s.below(1), 0u);
}

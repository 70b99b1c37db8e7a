#include <gtest/gtest.h>

#include <random>

#include "xrnpe/rmmec.hpp"

using namespace xrnpe;

namespace {

// Digit-level gating expectation computed from the operands directly.
std::uint32_t expected_gated(MulWidth w, std::uint32_t a, std::uint32_t b) {
  std::uint32_t gated = 0;
  const int digits = bits_of(w) / 2;
  for (int i = 0; i < digits; ++i) {
    for (int j = 0; j < digits; ++j) {
      if (((a >> (2 * i)) & 3u) == 0 || ((b >> (2 * j)) & 3u) == 0) ++gated;
    }
  }
  return gated;
}

}  // namespace

TEST(Mul2, Examples) {
  EXPECT_EQ(mul2(3, 3).product, 9);
  EXPECT_FALSE(mul2(3, 3).gated);
  EXPECT_EQ(mul2(0, 2).product, 0);
  EXPECT_TRUE(mul2(0, 2).gated);
  EXPECT_EQ(mul2(2, 3).product, 6);
}

TEST(Mul2, TruthTable) {
  for (std::uint8_t a = 0; a < 4; ++a) {
    for (std::uint8_t b = 0; b < 4; ++b) {
      EXPECT_EQ(mul2(a, b).product, a * b);
      EXPECT_EQ(mul2(a, b).gated, a == 0 || b == 0);
    }
  }
}

TEST(Rmmec, CellCounts) {
  EXPECT_EQ(cell_count(MulWidth::W2), 1);
  EXPECT_EQ(cell_count(MulWidth::W6), 9);
  EXPECT_EQ(cell_count(MulWidth::W12), 36);
}

TEST(ComposedMul, Examples) {
  EXPECT_EQ(composed_mul(MulWidth::W6, 63, 63).value, 3969u);
  const ComposedProduct z = composed_mul(MulWidth::W12, 0, 4095);
  EXPECT_EQ(z.value, 0u);
  EXPECT_EQ(z.gated, 36u);
  EXPECT_EQ(z.fired, 0u);
}

TEST(ComposedMul, ExhaustiveWidth2And6) {
  for (MulWidth w : {MulWidth::W2, MulWidth::W6}) {
    const std::uint32_t limit = 1u << bits_of(w);
    for (std::uint32_t a = 0; a < limit; ++a) {
      for (std::uint32_t b = 0; b < limit; ++b) {
        const ComposedProduct p = composed_mul(w, a, b);
        ASSERT_EQ(p.value, std::uint64_t{a} * b) << a << "*" << b;
        ASSERT_EQ(p.gated, expected_gated(w, a, b));
        ASSERT_EQ(p.fired + p.gated, static_cast<std::uint32_t>(cell_count(w)));
      }
    }
  }
}

TEST(ComposedMul, RandomAndBoundaryWidth12) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200000; ++i) {
    const auto a = static_cast<std::uint32_t>(rng() & 0xFFF);
    const auto b = static_cast<std::uint32_t>(rng() & 0xFFF);
    ASSERT_EQ(composed_mul(MulWidth::W12, a, b).value, std::uint64_t{a} * b);
  }
  for (std::uint32_t a : {0u, 1u, 2u, 4095u}) {
    for (std::uint32_t b : {0u, 1u, 2u, 4095u}) EXPECT_EQ(composed_mul(MulWidth::W12, a, b).value, std::uint64_t{a} * b);
  }
}

TEST(ComposedMul, CommutativeIncludingGating) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20000; ++i) {
    const auto a = static_cast<std::uint32_t>(rng() & 0xFFF);
    const auto b = static_cast<std::uint32_t>(rng() & 0xFFF);
    const ComposedProduct x = composed_mul(MulWidth::W12, a, b);
    const ComposedProduct y = composed_mul(MulWidth::W12, b, a);
    ASSERT_EQ(x.value, y.value);
    ASSERT_EQ(x.gated, y.gated);
  }
}

TEST(MulBlockArray, StatsExamples) {
  MulBlockArray grid(MulWidth::W12);
  EXPECT_EQ(grid.multiply(0xFFF, 0xFFF), 0xFFFull * 0xFFF);
  EXPECT_EQ(grid.stats().cells_fired, 36u);
  EXPECT_EQ(grid.stats().cells_gated, 0u);
  grid.reset();
  grid.multiply(0, 0xABC);
  EXPECT_EQ(grid.stats().cells_fired, 0u);
  EXPECT_EQ(grid.stats().cells_gated, 36u);
}

TEST(MulBlockArray, ZeroOperandStreamHasZeroUtilization) {
  MulBlockArray grid(MulWidth::W6);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) grid.multiply(0, static_cast<std::uint32_t>(rng() & 63));
  EXPECT_EQ(grid.stats().utilization(), 0.0);
  EXPECT_EQ(grid.stats().cells_gated, 9000u);
}

TEST(MulBlockArray, CountersNeverDecrease) {
  MulBlockArray grid(MulWidth::W6);
  std::mt19937_64 rng(6);
  GatingStats last;
  for (int i = 0; i < 1000; ++i) {
    grid.multiply(static_cast<std::uint32_t>(rng() & 63), static_cast<std::uint32_t>(rng() & 63));
    EXPECT_GE(grid.stats().cells_gated, last.cells_gated);
    EXPECT_GE(grid.stats().cells_fired, last.cells_fired);
    last = grid.stats();
  }
  EXPECT_EQ(grid.stats().cells_fired + grid.stats().cells_gated, 9000u);
}

TEST(MulBlockArray, RejectsOversizedOperands) {
  MulBlockArray grid(MulWidth::W2);
  EXPECT_THROW(grid.multiply(4, 1), std::out_of_range);
}

TEST(GatingStats, MergeBySummation) {
  GatingStats a{3, 1};
  a += GatingStats{1, 3};
  EXPECT_EQ(a.cells_fired, 4u);
  EXPECT_EQ(a.cells_gated, 4u);
  EXPECT_DOUBLE_EQ(a.utilization(), 0.5);
  EXPECT_EQ(GatingStats{}.utilization(), 0.0);
}

#pragma once

#include <cstdint>

namespace xrnpe {

/// Operand width of the reconfigurable mantissa multiplier: one 2-bit block
/// for the 4-bit formats, a 3x3 grid for Posit(8,0), a 6x6 grid for Posit(16,1).
enum class MulWidth : int { W2 = 2, W6 = 6, W12 = 12 };

constexpr int bits_of(MulWidth width) { return static_cast<int>(width); }
constexpr int cell_count(MulWidth width) { return (bits_of(width) / 2) * (bits_of(width) / 2); }

struct GatingStats {
  std::uint64_t cells_fired = 0;
  std::uint64_t cells_gated = 0;

  /// fired / (fired + gated); 0 when nothing ran.
  double utilization() const;

  GatingStats& operator+=(const GatingStats& other) {
    cells_fired += other.cells_fired;
    cells_gated += other.cells_gated;
    return *this;
  }
  friend bool operator==(const GatingStats&, const GatingStats&) = default;
};

struct Mul2Result {
  std::uint8_t product;
  bool gated;
};

/// 2-bit x 2-bit base block as sum-of-products logic. A cell with a zero
/// operand digit is gated and outputs zero.
constexpr Mul2Result mul2(std::uint8_t a, std::uint8_t b) {
  const unsigned a0 = a & 1u, a1 = (a >> 1) & 1u;
  const unsigned b0 = b & 1u, b1 = (b >> 1) & 1u;
  const bool gated = (a & 3u) == 0 || (b & 3u) == 0;
  if (gated) return {0, true};
  const unsigned p0 = a0 & b0;
  const unsigned p1 = (a1 & b0) ^ (a0 & b1);
  const unsigned p2 = (a1 & b1) & ~(a0 & b0) & 1u;
  const unsigned p3 = a1 & a0 & b1 & b0;
  return {static_cast<std::uint8_t>(p0 | (p1 << 1) | (p2 << 2) | (p3 << 3)), false};
}

struct ComposedProduct {
  std::uint64_t value;
  std::uint32_t fired;
  std::uint32_t gated;
};

/// Stateless composition: sum over digit pairs of mul2(a_i, b_j) << 2(i+j).
ComposedProduct composed_mul(MulWidth width, std::uint32_t a, std::uint32_t b);

/// A multiplier grid with cumulative gating counters. Counters only grow
/// until reset(); merge per-worker arrays with `stats() +=`.
class MulBlockArray {
 public:
  explicit MulBlockArray(MulWidth width) : width_(width) {}

  MulWidth width() const { return width_; }
  int cells() const { return cell_count(width_); }

  /// Exact a*b for operands below 2^width; throws std::out_of_range otherwise.
  std::uint64_t multiply(std::uint32_t a, std::uint32_t b);

  /// Whole-operand gating: the grid stays dark for one multiply.
  void gate_all() { stats_.cells_gated += static_cast<std::uint64_t>(cells()); }

  const GatingStats& stats() const { return stats_; }
  void reset() { stats_ = {}; }

 private:
  MulWidth width_;
  GatingStats stats_;
};

}  // namespace xrnpe

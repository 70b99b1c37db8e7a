#pragma once

#include <cstdint>
#include <vector>

#include "xrnpe/codec.hpp"
#include "xrnpe/exact.hpp"
#include "xrnpe/format_spec.hpp"

namespace xrnpe {

/// Product of two unpacked lane operands, before accumulation.
///
/// For Finite products value = (-1)^negative * 2^scale * significand / 2^fraction_bits
/// with the significand normalized into [1, 2).
struct LaneProduct {
  NumberClass cls = NumberClass::Zero;
  bool negative = false;
  int scale = 0;
  std::uint64_t significand = 0;
  int fraction_bits = 0;
  bool operand_gated = false;

  Rational exact() const;
};

/// Fixed-point accumulator wide enough to hold any sum of up to k_max
/// products of two finite values of `format` without rounding or overflow.
///
///   frac_bits = 2*max_fraction_bits + 2*max_scale
///   width     = 1 + ceil(log2 k_max) + 4*max_scale + 2*max_fraction_bits + 2
///
/// Stored as two's-complement 64-bit limbs.
class Quire {
 public:
  /// Throws std::invalid_argument for k_max == 0 or a real64 format.
  Quire(const FormatSpec& format, std::uint64_t k_max);

  const FormatSpec& format() const { return format_; }
  std::uint64_t k_max() const { return k_max_; }
  std::uint64_t count() const { return count_; }
  int width() const { return width_; }
  int frac_bits() const { return frac_bits_; }
  bool nar() const { return nar_; }
  bool is_zero() const;

  /// Adds a product exactly. Zero products only advance the count; NaR sets
  /// the sticky NaR flag. Throws ContractViolation past k_max or on overflow.
  void add(const LaneProduct& product);

  /// Exact accumulated value (zero when NaR is set).
  Rational value() const;

  /// Single terminal rounding: NaR pattern if flagged, otherwise
  /// encode(value(), target).
  std::uint32_t round(const FormatSpec& target) const;
  std::uint32_t round() const { return round(format_); }

  void clear();

 private:
  void add_shifted(std::uint64_t magnitude, int shift, bool negative);
  bool fits() const;

  FormatSpec format_;
  std::uint64_t k_max_;
  int width_;
  int frac_bits_;
  std::vector<std::uint64_t> limbs_;
  std::uint64_t count_ = 0;
  bool nar_ = false;
};

/// Bit width the Quire formula yields for a format and accumulation count.
int quire_width(const FormatSpec& format, std::uint64_t k_max);
int quire_frac_bits(const FormatSpec& format);

}  // namespace xrnpe

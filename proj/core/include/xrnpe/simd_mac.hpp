#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "xrnpe/codec.hpp"
#include "xrnpe/format_spec.hpp"
#include "xrnpe/quire.hpp"
#include "xrnpe/rmmec.hpp"

namespace xrnpe {

enum class SimdMode : std::uint8_t { X4_4bit, X2_Posit8, X1_Posit16 };
enum class FourBitKind : std::uint8_t { Fp4, Posit4 };

/// prec_sel: how a 16-bit operand word is split into lanes.
/// Lanes are packed little-endian: lane 0 is the least-significant field.
struct PrecSel {
  SimdMode mode = SimdMode::X1_Posit16;
  FourBitKind four_bit = FourBitKind::Fp4;  // only meaningful in X4_4bit

  int lane_count() const;
  int lane_width() const { return 16 / lane_count(); }
  FormatSpec lane_format() const;
  MulWidth mul_width() const;
  std::uint16_t lane_mask() const {
    return static_cast<std::uint16_t>((1u << lane_width()) - 1u);
  }

  /// Mode that runs `format` natively. Throws std::invalid_argument for real64.
  static PrecSel for_format(const FormatSpec& format);

  friend bool operator==(const PrecSel&, const PrecSel&) = default;
};

std::uint32_t extract_lane(std::uint16_t word, int lane, const PrecSel& sel);
std::uint16_t insert_lane(std::uint16_t word, int lane, std::uint32_t bits, const PrecSel& sel);

/// Multiplication-stage model for one lane pair: sign XOR, scale addition and
/// the fraction product on the RMMEC grid. Fractions are left-aligned to the
/// grid width; the hidden-bit cross terms are added outside the grid:
/// (2^W + fa)(2^W + fb) = 2^2W + 2^W (fa + fb) + fa*fb.
LaneProduct multiply_operands(const DecodedNumber& a, const DecodedNumber& b, MulBlockArray& rmmec);

struct MacStats {
  std::uint64_t mac_ops = 0;
  std::uint64_t operand_gated = 0;
  GatingStats cells;

  MacStats& operator+=(const MacStats& other) {
    mac_ops += other.mac_ops;
    operand_gated += other.operand_gated;
    cells += other.cells;
    return *this;
  }
  friend bool operator==(const MacStats&, const MacStats&) = default;
};

/// PerDot keeps every product exact in the quire and rounds once.
/// PerMac rounds the running sum after each product (comparison only).
enum class RoundingMode : std::uint8_t { PerDot, PerMac };

struct DotResult {
  std::vector<std::uint32_t> lanes;  // one result pattern per lane stream
  MacStats stats;
};

/// One SIMD MAC unit: an RMMEC grid sized for the mode plus lane quires.
class SimdMac {
 public:
  /// `output` is the format the quires round into; defaults to the lane
  /// format. A wider output keeps 4-bit sums from saturating.
  explicit SimdMac(PrecSel sel, std::optional<FormatSpec> output = std::nullopt);

  const PrecSel& sel() const { return sel_; }
  const FormatSpec& output_format() const { return output_; }

  /// Products for every lane of a word pair (lane 0 first). Updates stats.
  std::vector<LaneProduct> lane_multiply(std::uint16_t word_a, std::uint16_t word_b);

  /// Fused dot product over word streams; each lane is an independent dot.
  /// Lanes >= active_lanes are ignored and not counted. k_max = 0 sizes the
  /// quires for exactly a.size() terms. Throws DataError on length mismatch.
  DotResult dot(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b,
                RoundingMode rounding = RoundingMode::PerDot, int active_lanes = -1,
                std::uint64_t k_max = 0);

  const MacStats& stats() const { return stats_; }
  void reset_stats();

 private:
  LaneProduct multiply_lane(std::uint32_t a_bits, std::uint32_t b_bits);

  PrecSel sel_;
  FormatSpec format_;
  FormatSpec output_;
  MulBlockArray rmmec_;
  MacStats stats_;
};

/// Stateless form of SimdMac::dot.
DotResult dot(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b, const PrecSel& sel,
              RoundingMode rounding = RoundingMode::PerDot);

/// Scalar convenience: a single lane stream of `format` patterns.
std::uint32_t dot_scalar(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                         const FormatSpec& format, RoundingMode rounding = RoundingMode::PerDot);

}  // namespace xrnpe

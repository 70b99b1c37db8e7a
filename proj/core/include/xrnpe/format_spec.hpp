#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace xrnpe {

enum class FormatKind : std::uint8_t { Posit, Fp4, Real64 };

/// Identifies one of the engine's number formats and exposes the constants
/// derived from it. Posits are restricted to the three widths the SIMD lanes
/// implement: (4,1), (8,0) and (16,1). FP4 is E2M1 without Inf/NaN.
/// Real64 tags full-precision reference data (double).
class FormatSpec {
 public:
  static FormatSpec posit(int n, int es);
  static constexpr FormatSpec fp4() { return FormatSpec(FormatKind::Fp4, 4, 0); }
  static constexpr FormatSpec real64() { return FormatSpec(FormatKind::Real64, 64, 0); }

  constexpr FormatKind kind() const { return kind_; }
  constexpr int n() const { return n_; }
  constexpr int es() const { return es_; }
  constexpr bool is_posit() const { return kind_ == FormatKind::Posit; }
  constexpr bool is_fp4() const { return kind_ == FormatKind::Fp4; }
  constexpr bool is_real() const { return kind_ == FormatKind::Real64; }

  /// log2(useed) = 2^es.
  constexpr int useed_log2() const { return 1 << es_; }

  /// Largest binary exponent of a finite value: (n-2)*2^es for posits.
  constexpr int max_scale() const {
    switch (kind_) {
      case FormatKind::Posit: return (n_ - 2) * useed_log2();
      case FormatKind::Fp4: return 2;
      case FormatKind::Real64: return 1023;
    }
    return 0;
  }

  /// Smallest binary exponent of a nonzero value.
  constexpr int min_scale() const {
    switch (kind_) {
      case FormatKind::Posit: return -max_scale();
      case FormatKind::Fp4: return -1;
      case FormatKind::Real64: return -1074;
    }
    return 0;
  }

  /// Longest fraction field (hidden bit excluded). n-3-es for posits, floored at 0.
  constexpr int max_fraction_bits() const {
    switch (kind_) {
      case FormatKind::Posit: return n_ - 3 - es_ > 0 ? n_ - 3 - es_ : 0;
      case FormatKind::Fp4: return 1;
      case FormatKind::Real64: return 52;
    }
    return 0;
  }

  /// Storage width used for model-size accounting. Real64 tensors stand in for
  /// the FP32 baseline and are accounted at 32 bits.
  constexpr int storage_bits() const { return kind_ == FormatKind::Real64 ? 32 : n_; }

  constexpr std::uint32_t mask() const {
    return n_ >= 32 ? 0xFFFFFFFFu : ((std::uint32_t{1} << n_) - 1u);
  }

  /// Canonical name: posit16_1, posit8_0, posit4_1, fp4, real64.
  std::string name() const;

  friend constexpr bool operator==(const FormatSpec&, const FormatSpec&) = default;

 private:
  constexpr FormatSpec(FormatKind kind, int n, int es) : kind_(kind), n_(n), es_(es) {}

  FormatKind kind_;
  int n_;
  int es_;
};

inline const FormatSpec kPosit4_1 = FormatSpec::posit(4, 1);
inline const FormatSpec kPosit8_0 = FormatSpec::posit(8, 0);
inline const FormatSpec kPosit16_1 = FormatSpec::posit(16, 1);
inline constexpr FormatSpec kFp4 = FormatSpec::fp4();
inline constexpr FormatSpec kReal64 = FormatSpec::real64();

/// Accepts the canonical names plus a few aliases (fp32 and real map to real64).
std::optional<FormatSpec> parse_format(std::string_view name);

}  // namespace xrnpe

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "xrnpe/exact.hpp"
#include "xrnpe/format_spec.hpp"

namespace xrnpe {

enum class NumberClass : std::uint8_t { Zero, NaR, Finite };

const char* to_string(NumberClass cls);

/// Unpacked value produced by the input-processing stage.
///
/// For Finite values: value = (-1)^negative * 2^scale * fraction / 2^fraction_bits
/// with the hidden bit included in `fraction`, so 2^fraction_bits <= fraction <
/// 2^(fraction_bits+1). Zero and NaR carry zero scale/fraction; the sign is
/// only kept for FP4 negative zero.
struct DecodedNumber {
  NumberClass cls = NumberClass::Zero;
  bool negative = false;
  int scale = 0;
  std::uint32_t fraction = 0;
  int fraction_bits = 0;

  bool is_zero() const { return cls == NumberClass::Zero; }
  bool is_nar() const { return cls == NumberClass::NaR; }
  bool is_finite() const { return cls == NumberClass::Finite; }

  friend bool operator==(const DecodedNumber&, const DecodedNumber&) = default;
};

/// Decodes an n-bit pattern of a posit or FP4 format. Every pattern is valid.
DecodedNumber decode(std::uint32_t bits, const FormatSpec& spec);

/// Exact value of a Finite or Zero number. Throws std::domain_error for NaR.
Rational exact_value(const DecodedNumber& number);

/// Round-to-nearest-even onto the format's value lattice. Posits saturate at
/// +-maxpos and never round a nonzero value to zero; FP4 saturates at +-6.
std::uint32_t encode(const Rational& value, const FormatSpec& spec);

/// NaR encodes to the posit NaR pattern (rejected for FP4), Zero to the zero
/// pattern, Finite values by their exact value.
std::uint32_t encode(const DecodedNumber& number, const FormatSpec& spec);

std::uint32_t zero_bits(const FormatSpec& spec);
std::uint32_t nar_bits(const FormatSpec& spec);
std::uint32_t maxpos_bits(const FormatSpec& spec);
std::uint32_t minpos_bits(const FormatSpec& spec);
bool is_nar(std::uint32_t bits, const FormatSpec& spec);

/// Posit: two's complement of the pattern. FP4: sign-bit flip.
std::uint32_t negate(std::uint32_t bits, const FormatSpec& spec);

/// Posit patterns read as n-bit two's complement integers.
std::int32_t signed_pattern(std::uint32_t bits, const FormatSpec& spec);

/// Approximate value as a double (exact for every posit/FP4 pattern); NaR -> NaN.
double to_double(std::uint32_t bits, const FormatSpec& spec);

struct CodecEntry {
  std::uint32_t bits;
  DecodedNumber decoded;
  Rational value;  // zero for NaR
};

/// All 2^n patterns. Posits are listed in two's-complement order starting
/// from the most negative value with NaR last; FP4 in pattern order.
std::vector<CodecEntry> enumerate(const FormatSpec& spec);

/// CSV with header `bits,class,exact_value,float64_approx`.
void write_conformance_csv(std::ostream& out, const FormatSpec& spec);

/// Fast rounding of doubles using a precomputed lattice; gives the same
/// pattern as encode(rational_from_double(x)). NaN maps to NaR (posits) or
/// throws (FP4); infinities saturate.
class LatticeRounder {
 public:
  explicit LatticeRounder(const FormatSpec& spec);

  std::uint32_t round(double x) const;
  double value(std::uint32_t bits) const { return values_[bits & spec_.mask()]; }
  const FormatSpec& spec() const { return spec_; }
  double max_value() const { return positives_.back(); }

 private:
  FormatSpec spec_;
  std::vector<double> values_;        // indexed by pattern
  std::vector<double> positives_;     // ascending positive magnitudes
  std::vector<std::uint32_t> pos_bits_;
};

}  // namespace xrnpe

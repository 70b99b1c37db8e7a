#include "xrnpe/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace xrnpe {

namespace mp = boost::multiprecision;

namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

DecodedNumber decode_posit(std::uint32_t bits, const FormatSpec& spec) {
  const int n = spec.n();
  const int es = spec.es();
  const std::uint32_t mask = spec.mask();
  bits &= mask;
  if (bits == 0) return {};
  const std::uint32_t sign_bit = std::uint32_t{1} << (n - 1);
  if (bits == sign_bit) return DecodedNumber{NumberClass::NaR, false, 0, 0, 0};

  DecodedNumber out;
  out.cls = NumberClass::Finite;
  out.negative = (bits & sign_bit) != 0;
  const std::uint32_t magnitude = out.negative ? ((~bits + 1u) & mask) : bits;

  // Regime: run of identical bits starting just below the sign.
  int pos = n - 2;
  const bool first = ((magnitude >> pos) & 1u) != 0;
  int run = 0;
  while (pos >= 0 && (((magnitude >> pos) & 1u) != 0) == first) {
    ++run;
    --pos;
  }
  const int k = first ? run - 1 : -run;
  if (pos >= 0) --pos;  // regime terminator

  // Exponent bits (missing trailing bits read as zero).
  int exponent = 0;
  for (int i = 0; i < es; ++i) {
    exponent <<= 1;
    if (pos >= 0) {
      exponent |= static_cast<int>((magnitude >> pos) & 1u);
      --pos;
    }
  }
  const int fraction_bits = pos + 1;
  const std::uint32_t fraction_field =
      fraction_bits > 0 ? (magnitude & ((std::uint32_t{1} << fraction_bits) - 1u)) : 0u;

  out.scale = k * spec.useed_log2() + exponent;
  out.fraction_bits = fraction_bits;
  out.fraction = (std::uint32_t{1} << fraction_bits) | fraction_field;
  return out;
}

DecodedNumber decode_fp4(std::uint32_t bits) {
  bits &= 0xFu;
  DecodedNumber out;
  out.negative = (bits & 0x8u) != 0;
  const std::uint32_t exponent = (bits >> 1) & 0x3u;
  const std::uint32_t mantissa = bits & 0x1u;
  if (exponent == 0 && mantissa == 0) {
    out.cls = NumberClass::Zero;
    return out;
  }
  out.cls = NumberClass::Finite;
  if (exponent == 0) {
    // Subnormal 0.5 normalizes to 1.0 * 2^-1.
    out.scale = -1;
    out.fraction_bits = 0;
    out.fraction = 1;
    return out;
  }
  out.scale = static_cast<int>(exponent) - 1;
  out.fraction_bits = 1;
  out.fraction = 2u | mantissa;
  return out;
}

// Picks between the lattice neighbours lo < |x| < hi (patterns of magnitudes).
std::uint32_t nearer(const Rational& magnitude, std::uint32_t lo, std::uint32_t hi,
                     const FormatSpec& spec) {
  const Rational lo_value = exact_value(decode(lo, spec));
  if (magnitude == lo_value) return lo;
  const Rational hi_value = exact_value(decode(hi, spec));
  const Rational twice = magnitude * 2;
  const Rational sum = lo_value + hi_value;
  if (twice < sum) return lo;
  if (twice > sum) return hi;
  return (lo & 1u) == 0 ? lo : hi;
}

std::uint32_t encode_posit_magnitude(const Rational& magnitude, const FormatSpec& spec) {
  const int n = spec.n();
  const int es = spec.es();
  const std::uint32_t maxpos = maxpos_bits(spec);
  const std::uint32_t minpos = minpos_bits(spec);
  if (magnitude >= exact_value(decode(maxpos, spec))) return maxpos;
  if (magnitude <= exact_value(decode(minpos, spec))) return minpos;

  const int scale = floor_log2(magnitude);
  const int k = floor_div(scale, spec.useed_log2());
  const int exponent = scale - k * spec.useed_log2();

  // Regime field: k>=0 -> (k+1) ones then a zero; k<0 -> -k zeros then a one.
  int regime_len = 0;
  std::uint32_t regime = 0;
  if (k >= 0) {
    regime_len = k + 2;
    regime = ((std::uint32_t{1} << (k + 1)) - 1u) << 1;
  } else {
    regime_len = -k + 1;
    regime = 1u;
  }
  const int remaining = n - 1 - regime_len;  // >= 0 strictly inside (minpos, maxpos)

  const int exponent_kept = std::min(es, remaining);
  const int fraction_kept = std::max(0, remaining - es);
  const std::uint32_t exponent_field = static_cast<std::uint32_t>(exponent) >> (es - exponent_kept);

  // floor(|x| * 2^(F - scale)) = 2^F + truncated fraction.
  const BigInt scaled = floor_scaled(magnitude, fraction_kept - scale);
  const std::uint32_t fraction_field =
      fraction_kept > 0
          ? (scaled - (BigInt(1) << fraction_kept)).convert_to<std::uint32_t>()
          : 0u;

  const std::uint32_t lo = (regime << remaining) | (exponent_field << fraction_kept) | fraction_field;
  return nearer(magnitude, lo, lo + 1u, spec);
}

std::uint32_t encode_fp4_magnitude(const Rational& magnitude) {
  static const Rational kSix(6);
  if (magnitude >= kSix) return 0x7u;
  const FormatSpec spec = FormatSpec::fp4();
  if (magnitude == 0) return 0u;
  const int scale = floor_log2(magnitude);
  std::uint32_t lo = 0;
  if (scale >= -1) {
    const std::uint32_t exponent_field = static_cast<std::uint32_t>(scale + 1);
    const auto mantissa = (floor_scaled(magnitude, 1 - scale) - 2).convert_to<std::uint32_t>();
    lo = (exponent_field << 1) | mantissa;
  }
  return nearer(magnitude, lo, lo + 1u, spec);
}

}  // namespace

const char* to_string(NumberClass cls) {
  switch (cls) {
    case NumberClass::Zero: return "zero";
    case NumberClass::NaR: return "nar";
    case NumberClass::Finite: return "finite";
  }
  return "unknown";
}

DecodedNumber decode(std::uint32_t bits, const FormatSpec& spec) {
  switch (spec.kind()) {
    case FormatKind::Posit: return decode_posit(bits, spec);
    case FormatKind::Fp4: return decode_fp4(bits);
    case FormatKind::Real64: break;
  }
  throw std::invalid_argument("decode: real64 has no narrow bit encoding");
}

Rational exact_value(const DecodedNumber& number) {
  switch (number.cls) {
    case NumberClass::Zero: return Rational(0);
    case NumberClass::NaR: throw std::domain_error("NaR has no real value");
    case NumberClass::Finite: break;
  }
  Rational value = dyadic(BigInt(number.fraction), number.scale - number.fraction_bits);
  return number.negative ? Rational(-value) : value;
}

std::uint32_t encode(const Rational& value, const FormatSpec& spec) {
  if (spec.is_real()) throw std::invalid_argument("encode: real64 has no narrow bit encoding");
  if (value == 0) return 0u;
  const bool negative = value < 0;
  const Rational magnitude = negative ? Rational(-value) : value;
  if (spec.is_posit()) {
    const std::uint32_t bits = encode_posit_magnitude(magnitude, spec);
    return negative ? negate(bits, spec) : bits;
  }
  const std::uint32_t bits = encode_fp4_magnitude(magnitude);
  return negative ? (bits | 0x8u) : bits;
}

std::uint32_t encode(const DecodedNumber& number, const FormatSpec& spec) {
  switch (number.cls) {
    case NumberClass::NaR:
      if (!spec.is_posit()) throw std::invalid_argument("encode: " + spec.name() + " has no NaR");
      return nar_bits(spec);
    case NumberClass::Zero:
      return (spec.is_fp4() && number.negative) ? 0x8u : 0u;
    case NumberClass::Finite:
      break;
  }
  return encode(exact_value(number), spec);
}

std::uint32_t zero_bits(const FormatSpec&) { return 0u; }

std::uint32_t nar_bits(const FormatSpec& spec) {
  if (!spec.is_posit()) throw std::invalid_argument(spec.name() + " has no NaR");
  return std::uint32_t{1} << (spec.n() - 1);
}

std::uint32_t maxpos_bits(const FormatSpec& spec) {
  if (spec.is_fp4()) return 0x7u;
  return (std::uint32_t{1} << (spec.n() - 1)) - 1u;
}

std::uint32_t minpos_bits(const FormatSpec&) { return 0x1u; }

bool is_nar(std::uint32_t bits, const FormatSpec& spec) {
  return spec.is_posit() && (bits & spec.mask()) == nar_bits(spec);
}

std::uint32_t negate(std::uint32_t bits, const FormatSpec& spec) {
  if (spec.is_fp4()) return (bits ^ 0x8u) & 0xFu;
  return (~bits + 1u) & spec.mask();
}

std::int32_t signed_pattern(std::uint32_t bits, const FormatSpec& spec) {
  bits &= spec.mask();
  const std::uint32_t sign_bit = std::uint32_t{1} << (spec.n() - 1);
  return (bits & sign_bit) ? static_cast<std::int32_t>(bits) - static_cast<std::int32_t>(sign_bit << 1)
                           : static_cast<std::int32_t>(bits);
}

double to_double(std::uint32_t bits, const FormatSpec& spec) {
  const DecodedNumber d = decode(bits, spec);
  switch (d.cls) {
    case NumberClass::Zero: return d.negative ? -0.0 : 0.0;
    case NumberClass::NaR: return std::numeric_limits<double>::quiet_NaN();
    case NumberClass::Finite: break;
  }
  const double magnitude = std::ldexp(static_cast<double>(d.fraction), d.scale - d.fraction_bits);
  return d.negative ? -magnitude : magnitude;
}

std::vector<CodecEntry> enumerate(const FormatSpec& spec) {
  if (spec.is_real() || spec.n() > 16) throw std::invalid_argument("enumerate: format too wide");
  const std::uint32_t count = std::uint32_t{1} << spec.n();
  std::vector<CodecEntry> table;
  table.reserve(count);
  auto push = [&](std::uint32_t bits) {
    const DecodedNumber d = decode(bits, spec);
    table.push_back({bits, d, d.is_nar() ? Rational(0) : exact_value(d)});
  };
  if (spec.is_posit()) {
    const std::uint32_t nar = nar_bits(spec);
    for (std::uint32_t i = 1; i < count; ++i) push((nar + i) & spec.mask());
    push(nar);
  } else {
    for (std::uint32_t bits = 0; bits < count; ++bits) push(bits);
  }
  return table;
}

void write_conformance_csv(std::ostream& out, const FormatSpec& spec) {
  const int hex_digits = (spec.n() + 3) / 4;
  out << "bits,class,exact_value,float64_approx\n";
  for (const CodecEntry& entry : enumerate(spec)) {
    char hex[16];
    std::snprintf(hex, sizeof hex, "0x%0*X", hex_digits, entry.bits);
    out << hex << ',' << to_string(entry.decoded.cls) << ',';
    if (entry.decoded.is_nar()) {
      out << "NaR,nan\n";
      continue;
    }
    char approx[40];
    std::snprintf(approx, sizeof approx, "%.17g", to_double(entry.bits, spec));
    std::string exact = to_rational_string(entry.value);
    if (entry.decoded.is_zero() && entry.decoded.negative) exact = "-0";
    out << exact << ',' << approx << '\n';
  }
}

LatticeRounder::LatticeRounder(const FormatSpec& spec) : spec_(spec) {
  if (spec.is_real()) throw std::invalid_argument("LatticeRounder: real64 needs no rounding");
  const std::uint32_t count = std::uint32_t{1} << spec.n();
  values_.resize(count);
  for (std::uint32_t bits = 0; bits < count; ++bits) values_[bits] = xrnpe::to_double(bits, spec);
  // Candidate magnitudes: positive patterns, plus zero for FP4 (which may round to zero).
  const std::uint32_t first = spec.is_fp4() ? 0u : 1u;
  const std::uint32_t last = maxpos_bits(spec);
  for (std::uint32_t bits = first; bits <= last; ++bits) {
    positives_.push_back(values_[bits]);
    pos_bits_.push_back(bits);
  }
}

std::uint32_t LatticeRounder::round(double x) const {
  if (std::isnan(x)) {
    if (spec_.is_posit()) return nar_bits(spec_);
    throw std::invalid_argument("LatticeRounder: NaN has no FP4 encoding");
  }
  if (x == 0.0 && !std::signbit(x)) return 0u;
  const bool negative = std::signbit(x);
  const double magnitude = std::fabs(x);
  std::uint32_t bits = 0;
  if (magnitude == 0.0) {
    bits = 0;
  } else {
    const auto it = std::upper_bound(positives_.begin(), positives_.end(), magnitude);
    if (it == positives_.begin()) {
      bits = pos_bits_.front();
    } else if (it == positives_.end()) {
      bits = pos_bits_.back();
    } else {
      const std::size_t hi = static_cast<std::size_t>(it - positives_.begin());
      const std::size_t lo = hi - 1;
      if (positives_[lo] == magnitude) {
        bits = pos_bits_[lo];
      } else {
        // Neighbours have few significant bits, so the midpoint is exact.
        const double mid = 0.5 * (positives_[lo] + positives_[hi]);
        if (magnitude < mid) {
          bits = pos_bits_[lo];
        } else if (magnitude > mid) {
          bits = pos_bits_[hi];
        } else {
          bits = (pos_bits_[lo] & 1u) == 0 ? pos_bits_[lo] : pos_bits_[hi];
        }
      }
    }
  }
  if (!negative) return bits;
  if (spec_.is_fp4()) return bits | 0x8u;
  return bits == 0 ? 0u : negate(bits, spec_);
}

}  // namespace xrnpe

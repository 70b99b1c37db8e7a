#include "xrnpe/exact.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace xrnpe {

namespace mp = boost::multiprecision;

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw std::domain_error("non-finite double has no exact rational value");
  if (value == 0.0) return Rational(0);
  int exp = 0;
  const double mant = std::frexp(value, &exp);  // |mant| in [0.5, 1)
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  return dyadic(BigInt(scaled), exp - 53);
}

Rational dyadic(const BigInt& mantissa, int exp2) {
  if (exp2 >= 0) return Rational(BigInt(mantissa << exp2));
  return Rational(mantissa, BigInt(BigInt(1) << -exp2));
}

int floor_log2(const Rational& x) {
  BigInt num = mp::abs(mp::numerator(x));
  const BigInt den = mp::denominator(x);
  if (num == 0) throw std::domain_error("floor_log2 of zero");
  int guess = static_cast<int>(mp::msb(num)) - static_cast<int>(mp::msb(den));
  // 2^guess <= num/den < 2^(guess+1) or one below.
  const bool below = guess >= 0 ? num < (den << guess) : (num << -guess) < den;
  return below ? guess - 1 : guess;
}

BigInt floor_scaled(const Rational& x, int shift) {
  BigInt num = mp::abs(mp::numerator(x));
  BigInt den = mp::denominator(x);
  if (shift >= 0) {
    num <<= shift;
  } else {
    den <<= -shift;
  }
  return num / den;
}

std::string to_rational_string(const Rational& x) {
  const BigInt& den = mp::denominator(x);
  if (den == 1) return mp::numerator(x).str();
  return mp::numerator(x).str() + "/" + den.str();
}

double to_double(const Rational& x) {
  if (x == 0) return 0.0;
  const int lg = floor_log2(x);
  if (lg > 1100) return mp::numerator(x) < 0 ? -HUGE_VAL : HUGE_VAL;
  if (lg < -1200) return mp::numerator(x) < 0 ? -0.0 : 0.0;
  // 54 significant bits plus sticky, then round half to even in integer domain.
  const int shift = 55 - lg;
  BigInt num = mp::abs(mp::numerator(x));
  BigInt den = mp::denominator(x);
  if (shift >= 0) {
    num <<= shift;
  } else {
    den <<= -shift;
  }
  BigInt quotient;
  BigInt remainder;
  mp::divide_qr(num, den, quotient, remainder);
  auto q = quotient.convert_to<std::uint64_t>();  // 56 bits
  int exp = -shift;
  // Subnormal handling: keep the quotient but let ldexp do the final scaling
  // only after rounding to the available precision.
  int drop = 3;
  const int bottom = lg - 52;  // exponent of the unit in the last place for normals
  if (bottom < -1074) drop += -1074 - bottom;
  if (drop >= 60) return mp::numerator(x) < 0 ? -0.0 : 0.0;
  const std::uint64_t half = std::uint64_t{1} << (drop - 1);
  const std::uint64_t low = q & ((std::uint64_t{1} << drop) - 1);
  std::uint64_t kept = q >> drop;
  const bool sticky = remainder != 0;
  if (low > half || (low == half && (sticky || (kept & 1u)))) ++kept;
  const double magnitude = std::ldexp(static_cast<double>(kept), exp + drop);
  return mp::numerator(x) < 0 ? -magnitude : magnitude;
}

Rational parse_rational(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
  };
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) return fail();

  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_rational(text.substr(0, slash));
    const Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) return fail();
    return num / den;
  }

  bool negative = false;
  std::size_t i = 0;
  if (text[i] == '+' || text[i] == '-') {
    negative = text[i] == '-';
    ++i;
  }
  BigInt digits = 0;
  int decimals = 0;
  bool any_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = digits * 10 + (c - '0');
      any_digit = true;
      if (seen_point) ++decimals;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) return fail();
  int exponent = 0;
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') return fail();
    ++i;
    bool exp_negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      exp_negative = text[i] == '-';
      ++i;
    }
    if (i == text.size()) return fail();
    for (; i < text.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) return fail();
      exponent = exponent * 10 + (text[i] - '0');
      if (exponent > 100000) return fail();
    }
    if (exp_negative) exponent = -exponent;
  }
  exponent -= decimals;
  Rational value(digits);
  if (exponent > 0) value *= Rational(mp::pow(BigInt(10), static_cast<unsigned>(exponent)));
  if (exponent < 0) value /= Rational(mp::pow(BigInt(10), static_cast<unsigned>(-exponent)));
  return negative ? Rational(-value) : value;
}

}  // namespace xrnpe

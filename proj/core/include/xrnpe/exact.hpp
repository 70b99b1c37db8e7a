#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace xrnpe {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Exact value of a finite double.
Rational rational_from_double(double value);

/// m * 2^exp2.
Rational dyadic(const BigInt& mantissa, int exp2);

/// floor(log2 |x|) for nonzero x.
int floor_log2(const Rational& x);

/// floor(|x| * 2^shift), shift may be negative.
BigInt floor_scaled(const Rational& x, int shift);

/// Reduced "p/q" form, or "p" when the denominator is 1.
std::string to_rational_string(const Rational& x);

/// Nearest double (ties to even).
double to_double(const Rational& x);

/// Parses "p/q", integers, and decimals with optional exponent ("2.6", "-1e9",
/// "3.25e-2"). Throws std::invalid_argument on malformed input.
Rational parse_rational(std::string_view text);

}  // namespace xrnpe

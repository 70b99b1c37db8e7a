// Reference model for tests. Built on GMP rationals and written from the
// format definitions directly, without any code from the library under test.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <gmpxx.h>

namespace oracle {

struct Format {
  int n = 16;
  int es = 1;
  bool fp4 = false;

  static Format posit(int n, int es) { return {n, es, false}; }
  static Format e2m1() { return {4, 0, true}; }
  std::uint32_t mask() const { return (1u << n) - 1u; }
  std::uint32_t nar() const { return 1u << (n - 1); }
};

/// nullopt for NaR.
std::optional<mpq_class> value(std::uint32_t bits, const Format& f);

/// Nearest pattern by search over the sorted value set. Ties pick the
/// pattern with an even last bit. Posits clamp to [minpos, maxpos] in
/// magnitude; E2M1 clamps to 6 and keeps the sign of a zero result.
std::uint32_t nearest(const mpq_class& x, const Format& f);

/// Sum of products in exact arithmetic; nullopt when any operand is NaR.
std::optional<mpq_class> exact_dot(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                                   const Format& f);

/// nearest(exact_dot), NaR pattern when an operand is NaR.
std::uint32_t rounded_dot(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b, const Format& f);

/// Double approximation from a rational (mpq get_d truncates; fine for tests).
double approx(const mpq_class& q);

}  // namespace oracle

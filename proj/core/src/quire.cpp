#include "xrnpe/quire.hpp"

#include <bit>
#include <stdexcept>
#include <string>

#include "xrnpe/error.hpp"

namespace xrnpe {

Rational LaneProduct::exact() const {
  if (cls == NumberClass::NaR) throw std::domain_error("NaR product has no real value");
  if (cls == NumberClass::Zero) return Rational(0);
  Rational v = dyadic(BigInt(significand), scale - fraction_bits);
  return negative ? Rational(-v) : v;
}

int quire_frac_bits(const FormatSpec& format) {
  return 2 * format.max_fraction_bits() + 2 * format.max_scale();
}

int quire_width(const FormatSpec& format, std::uint64_t k_max) {
  // ceil(log2 k_max)
  const int count_bits = k_max <= 1 ? 0 : static_cast<int>(std::bit_width(k_max - 1));
  return 1 + count_bits + 4 * format.max_scale() + 2 * format.max_fraction_bits() + 2;
}

Quire::Quire(const FormatSpec& format, std::uint64_t k_max) : format_(format), k_max_(k_max) {
  if (k_max == 0) throw std::invalid_argument("quire k_max must be at least 1");
  if (format.is_real()) throw std::invalid_argument("quire needs a posit or FP4 format");
  width_ = quire_width(format, k_max);
  frac_bits_ = quire_frac_bits(format);
  // One spare limb so a single out-of-range add is detectable before wrapping.
  limbs_.assign(static_cast<std::size_t>(width_ / 64 + 2), 0);
}

bool Quire::is_zero() const {
  for (std::uint64_t limb : limbs_) {
    if (limb != 0) return false;
  }
  return true;
}

void Quire::clear() {
  std::fill(limbs_.begin(), limbs_.end(), 0);
  count_ = 0;
  nar_ = false;
}

void Quire::add(const LaneProduct& product) {
  if (count_ >= k_max_) {
    throw ContractViolation("quire accumulation count exceeds k_max=" + std::to_string(k_max_));
  }
  ++count_;
  switch (product.cls) {
    case NumberClass::Zero: return;
    case NumberClass::NaR: nar_ = true; return;
    case NumberClass::Finite: break;
  }
  // Grid products carry 2W fraction bits; the low ones are zero whenever the
  // format's fraction is narrower than the grid.
  std::uint64_t significand = product.significand;
  int shift = product.scale - product.fraction_bits + frac_bits_;
  while (shift < 0 && significand != 0 && (significand & 1u) == 0) {
    significand >>= 1;
    ++shift;
  }
  if (shift < 0) {
    throw ContractViolation("product below quire resolution (scale " + std::to_string(product.scale) + ")");
  }
  add_shifted(significand, shift, product.negative);
  if (!fits()) {
    throw ContractViolation("quire overflow beyond " + std::to_string(width_) + " bits");
  }
}

void Quire::add_shifted(std::uint64_t magnitude, int shift, bool negative) {
  const std::size_t limb = static_cast<std::size_t>(shift / 64);
  const int offset = shift % 64;
  // Shifted magnitude spans at most two limbs.
  std::uint64_t parts[2] = {magnitude << offset, offset == 0 ? 0 : magnitude >> (64 - offset)};
  if (limb + 1 >= limbs_.size()) {
    throw ContractViolation("quire overflow beyond " + std::to_string(width_) + " bits");
  }
  if (!negative) {
    unsigned carry = 0;
    for (std::size_t i = limb; i < limbs_.size(); ++i) {
      const std::uint64_t addend = (i - limb < 2) ? parts[i - limb] : 0;
      const std::uint64_t sum = limbs_[i] + addend;
      const unsigned c1 = sum < limbs_[i];
      const std::uint64_t total = sum + carry;
      const unsigned c2 = total < sum;
      limbs_[i] = total;
      carry = c1 | c2;
      if (carry == 0 && i - limb >= 1) break;
    }
  } else {
    unsigned borrow = 0;
    for (std::size_t i = limb; i < limbs_.size(); ++i) {
      const std::uint64_t subtrahend = (i - limb < 2) ? parts[i - limb] : 0;
      const std::uint64_t diff = limbs_[i] - subtrahend;
      const unsigned b1 = limbs_[i] < subtrahend;
      const std::uint64_t total = diff - borrow;
      const unsigned b2 = diff < borrow;
      limbs_[i] = total;
      borrow = b1 | b2;
      if (borrow == 0 && i - limb >= 1) break;
    }
  }
}

bool Quire::fits() const {
  // Bits from width-1 up to the top of storage must all equal the sign.
  const bool sign = (limbs_.back() >> 63) != 0;
  const std::uint64_t fill = sign ? ~std::uint64_t{0} : 0;
  const auto first = static_cast<std::size_t>((width_ - 1) / 64);
  const int offset = (width_ - 1) % 64;
  if ((limbs_[first] >> offset) != (fill >> offset)) return false;
  for (std::size_t i = first + 1; i < limbs_.size(); ++i) {
    if (limbs_[i] != fill) return false;
  }
  return true;
}

Rational Quire::value() const {
  if (nar_) return Rational(0);
  const bool negative = (limbs_.back() >> 63) != 0;
  BigInt magnitude = 0;
  if (!negative) {
    for (std::size_t i = limbs_.size(); i-- > 0;) magnitude = (magnitude << 64) | limbs_[i];
  } else {
    // Two's complement negate while assembling.
    std::vector<std::uint64_t> neg(limbs_.size());
    unsigned carry = 1;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
      const std::uint64_t inverted = ~limbs_[i];
      neg[i] = inverted + carry;
      carry = (carry && neg[i] == 0) ? 1u : 0u;
    }
    for (std::size_t i = neg.size(); i-- > 0;) magnitude = (magnitude << 64) | neg[i];
    magnitude = -magnitude;
  }
  return dyadic(magnitude, -frac_bits_);
}

std::uint32_t Quire::round(const FormatSpec& target) const {
  if (nar_) return nar_bits(target);
  if (is_zero()) return zero_bits(target);
  return encode(value(), target);
}

}  // namespace xrnpe

#include "xrnpe/rmmec.hpp"

#include <stdexcept>
#include <string>

namespace xrnpe {

double GatingStats::utilization() const {
  const std::uint64_t total = cells_fired + cells_gated;
  return total == 0 ? 0.0 : static_cast<double>(cells_fired) / static_cast<double>(total);
}

ComposedProduct composed_mul(MulWidth width, std::uint32_t a, std::uint32_t b) {
  const int digits = bits_of(width) / 2;
  ComposedProduct out{0, 0, 0};
  for (int i = 0; i < digits; ++i) {
    const auto ai = static_cast<std::uint8_t>((a >> (2 * i)) & 3u);
    for (int j = 0; j < digits; ++j) {
      const auto bj = static_cast<std::uint8_t>((b >> (2 * j)) & 3u);
      const Mul2Result cell = mul2(ai, bj);
      if (cell.gated) {
        ++out.gated;
        continue;
      }
      ++out.fired;
      out.value += static_cast<std::uint64_t>(cell.product) << (2 * (i + j));
    }
  }
  return out;
}

std::uint64_t MulBlockArray::multiply(std::uint32_t a, std::uint32_t b) {
  const std::uint32_t limit = std::uint32_t{1} << bits_of(width_);
  if (a >= limit || b >= limit) {
    throw std::out_of_range("operand exceeds " + std::to_string(bits_of(width_)) + "-bit multiplier");
  }
  const ComposedProduct p = composed_mul(width_, a, b);
  stats_.cells_fired += p.fired;
  stats_.cells_gated += p.gated;
  return p.value;
}

}  // namespace xrnpe

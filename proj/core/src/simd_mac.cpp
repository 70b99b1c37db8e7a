#include "xrnpe/simd_mac.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "xrnpe/error.hpp"

namespace xrnpe {

int PrecSel::lane_count() const {
  switch (mode) {
    case SimdMode::X4_4bit: return 4;
    case SimdMode::X2_Posit8: return 2;
    case SimdMode::X1_Posit16: return 1;
  }
  return 1;
}

FormatSpec PrecSel::lane_format() const {
  switch (mode) {
    case SimdMode::X4_4bit: return four_bit == FourBitKind::Fp4 ? kFp4 : kPosit4_1;
    case SimdMode::X2_Posit8: return kPosit8_0;
    case SimdMode::X1_Posit16: return kPosit16_1;
  }
  return kPosit16_1;
}

MulWidth PrecSel::mul_width() const {
  switch (mode) {
    case SimdMode::X4_4bit: return MulWidth::W2;
    case SimdMode::X2_Posit8: return MulWidth::W6;
    case SimdMode::X1_Posit16: return MulWidth::W12;
  }
  return MulWidth::W12;
}

PrecSel PrecSel::for_format(const FormatSpec& format) {
  if (format.is_fp4()) return {SimdMode::X4_4bit, FourBitKind::Fp4};
  if (format == kPosit4_1) return {SimdMode::X4_4bit, FourBitKind::Posit4};
  if (format == kPosit8_0) return {SimdMode::X2_Posit8, FourBitKind::Fp4};
  if (format == kPosit16_1) return {SimdMode::X1_Posit16, FourBitKind::Fp4};
  throw std::invalid_argument("no SIMD mode runs " + format.name());
}

std::uint32_t extract_lane(std::uint16_t word, int lane, const PrecSel& sel) {
  return (static_cast<std::uint32_t>(word) >> (lane * sel.lane_width())) & sel.lane_mask();
}

std::uint16_t insert_lane(std::uint16_t word, int lane, std::uint32_t bits, const PrecSel& sel) {
  const int shift = lane * sel.lane_width();
  const std::uint32_t mask = static_cast<std::uint32_t>(sel.lane_mask()) << shift;
  return static_cast<std::uint16_t>((word & ~mask) | ((bits << shift) & mask));
}

LaneProduct multiply_operands(const DecodedNumber& a, const DecodedNumber& b, MulBlockArray& rmmec) {
  LaneProduct p;
  if (a.is_nar() || b.is_nar()) {
    rmmec.gate_all();
    p.cls = NumberClass::NaR;
    return p;
  }
  if (a.is_zero() || b.is_zero()) {
    rmmec.gate_all();
    p.cls = NumberClass::Zero;
    p.operand_gated = true;
    return p;
  }
  const int w = bits_of(rmmec.width());
  if (a.fraction_bits > w || b.fraction_bits > w) {
    throw std::invalid_argument("fraction wider than the " + std::to_string(w) + "-bit multiplier");
  }
  const std::uint32_t fa = (a.fraction - (std::uint32_t{1} << a.fraction_bits)) << (w - a.fraction_bits);
  const std::uint32_t fb = (b.fraction - (std::uint32_t{1} << b.fraction_bits)) << (w - b.fraction_bits);
  const std::uint64_t cross = rmmec.multiply(fa, fb);
  std::uint64_t significand = (std::uint64_t{1} << (2 * w)) +
                              ((static_cast<std::uint64_t>(fa) + fb) << w) + cross;

  p.cls = NumberClass::Finite;
  p.negative = a.negative != b.negative;
  p.scale = a.scale + b.scale;
  p.fraction_bits = 2 * w;
  if (significand >= (std::uint64_t{1} << (2 * w + 1))) {
    // Significand carry: [2,4) -> [1,2) by bumping the scale.
    ++p.scale;
    ++p.fraction_bits;
  }
  p.significand = significand;
  return p;
}

SimdMac::SimdMac(PrecSel sel, std::optional<FormatSpec> output)
    : sel_(sel), format_(sel.lane_format()), output_(output.value_or(format_)), rmmec_(sel.mul_width()) {
  if (output_.is_real()) throw std::invalid_argument("MAC output format must be a posit or FP4");
}

void SimdMac::reset_stats() {
  stats_ = {};
  rmmec_.reset();
}

LaneProduct SimdMac::multiply_lane(std::uint32_t a_bits, std::uint32_t b_bits) {
  const GatingStats before = rmmec_.stats();
  LaneProduct p = multiply_operands(decode(a_bits, format_), decode(b_bits, format_), rmmec_);
  ++stats_.mac_ops;
  if (p.operand_gated) ++stats_.operand_gated;
  stats_.cells.cells_fired += rmmec_.stats().cells_fired - before.cells_fired;
  stats_.cells.cells_gated += rmmec_.stats().cells_gated - before.cells_gated;
  return p;
}

std::vector<LaneProduct> SimdMac::lane_multiply(std::uint16_t word_a, std::uint16_t word_b) {
  std::vector<LaneProduct> out;
  out.reserve(static_cast<std::size_t>(sel_.lane_count()));
  for (int lane = 0; lane < sel_.lane_count(); ++lane) {
    out.push_back(multiply_lane(extract_lane(word_a, lane, sel_), extract_lane(word_b, lane, sel_)));
  }
  return out;
}

DotResult SimdMac::dot(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b,
                       RoundingMode rounding, int active_lanes, std::uint64_t k_max) {
  if (a.size() != b.size()) {
    throw DataError("dot length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const int lanes = active_lanes < 0 ? sel_.lane_count() : std::min(active_lanes, sel_.lane_count());
  const std::uint64_t capacity = k_max == 0 ? std::max<std::uint64_t>(1, a.size()) : k_max;
  if (a.size() > capacity) {
    throw ContractViolation("dot length " + std::to_string(a.size()) + " exceeds k_max " +
                            std::to_string(capacity));
  }

  const MacStats before = stats_;
  DotResult result;
  result.lanes.resize(static_cast<std::size_t>(lanes), 0);

  if (rounding == RoundingMode::PerDot) {
    std::vector<Quire> quires(static_cast<std::size_t>(lanes), Quire(format_, capacity));
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (int lane = 0; lane < lanes; ++lane) {
        quires[static_cast<std::size_t>(lane)].add(
            multiply_lane(extract_lane(a[i], lane, sel_), extract_lane(b[i], lane, sel_)));
      }
    }
    for (int lane = 0; lane < lanes; ++lane) {
      result.lanes[static_cast<std::size_t>(lane)] = quires[static_cast<std::size_t>(lane)].round(output_);
    }
  } else {
    std::vector<std::uint32_t> acc(static_cast<std::size_t>(lanes), 0);
    std::vector<bool> nar(static_cast<std::size_t>(lanes), false);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (int lane = 0; lane < lanes; ++lane) {
        const auto l = static_cast<std::size_t>(lane);
        const LaneProduct p = multiply_lane(extract_lane(a[i], lane, sel_), extract_lane(b[i], lane, sel_));
        if (nar[l] || p.cls == NumberClass::NaR) {
          nar[l] = true;
          continue;
        }
        if (p.cls == NumberClass::Zero) continue;
        const Rational sum = exact_value(decode(acc[l], output_)) + p.exact();
        acc[l] = encode(sum, output_);
      }
    }
    for (int lane = 0; lane < lanes; ++lane) {
      const auto l = static_cast<std::size_t>(lane);
      result.lanes[l] = nar[l] ? nar_bits(output_) : acc[l];
    }
  }

  result.stats.mac_ops = stats_.mac_ops - before.mac_ops;
  result.stats.operand_gated = stats_.operand_gated - before.operand_gated;
  result.stats.cells.cells_fired = stats_.cells.cells_fired - before.cells.cells_fired;
  result.stats.cells.cells_gated = stats_.cells.cells_gated - before.cells.cells_gated;
  return result;
}

DotResult dot(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b, const PrecSel& sel,
              RoundingMode rounding) {
  SimdMac mac(sel);
  return mac.dot(a, b, rounding);
}

std::uint32_t dot_scalar(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                         const FormatSpec& format, RoundingMode rounding) {
  if (a.size() != b.size()) {
    throw DataError("dot length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const PrecSel sel = PrecSel::for_format(format);
  std::vector<std::uint16_t> wa(a.size());
  std::vector<std::uint16_t> wb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    wa[i] = insert_lane(0, 0, a[i], sel);
    wb[i] = insert_lane(0, 0, b[i], sel);
  }
  SimdMac mac(sel);
  return mac.dot(wa, wb, rounding, 1).lanes.front();
}

}  // namespace xrnpe

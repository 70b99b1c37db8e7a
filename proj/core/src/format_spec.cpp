#include "xrnpe/format_spec.hpp"

#include <stdexcept>

namespace xrnpe {

FormatSpec FormatSpec::posit(int n, int es) {
  const bool supported = (n == 4 && es == 1) || (n == 8 && es == 0) || (n == 16 && es == 1);
  if (!supported) {
    throw std::invalid_argument("unsupported posit configuration Posit(" + std::to_string(n) + "," +
                                std::to_string(es) + ")");
  }
  return FormatSpec(FormatKind::Posit, n, es);
}

std::string FormatSpec::name() const {
  switch (kind_) {
    case FormatKind::Posit: return "posit" + std::to_string(n_) + "_" + std::to_string(es_);
    case FormatKind::Fp4: return "fp4";
    case FormatKind::Real64: return "real64";
  }
  return "unknown";
}

std::optional<FormatSpec> parse_format(std::string_view name) {
  if (name == "posit16_1" || name == "posit16") return FormatSpec::posit(16, 1);
  if (name == "posit8_0" || name == "posit8") return FormatSpec::posit(8, 0);
  if (name == "posit4_1" || name == "posit4") return FormatSpec::posit(4, 1);
  if (name == "fp4" || name == "e2m1") return FormatSpec::fp4();
  if (name == "real64" || name == "fp32" || name == "real") return FormatSpec::real64();
  return std::nullopt;
}

}  // namespace xrnpe

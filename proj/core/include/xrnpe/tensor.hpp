#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xrnpe/format_spec.hpp"

namespace xrnpe {

/// Element type codes as stored in XTEN containers.
enum class DType : std::uint8_t { Real64 = 0, Posit16_1 = 1, Posit8_0 = 2, Posit4_1 = 3, Fp4 = 4 };

FormatSpec format_of(DType dtype);
DType dtype_of(const FormatSpec& format);
int element_bits(DType dtype);
/// Throws DataError for unknown codes.
DType dtype_from_code(std::uint8_t code);

/// Shaped, format-tagged container of raw element bit patterns. Real64
/// elements hold the IEEE-754 bits of a double. Row-major.
struct Tensor {
  DType dtype = DType::Real64;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint64_t> data;

  static Tensor zeros(DType dtype, std::vector<std::uint32_t> dims);
  static Tensor from_reals(std::vector<std::uint32_t> dims, std::span<const double> values);
  /// Rounds each value into `dtype` (nearest-even, saturating).
  static Tensor encode_reals(DType dtype, std::vector<std::uint32_t> dims, std::span<const double> values);

  FormatSpec format() const { return format_of(dtype); }
  std::size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(dims.size()); }
  std::uint32_t rows() const { return dims.at(0); }
  std::uint32_t cols() const { return dims.at(1); }

  std::uint32_t bits(std::size_t i) const { return static_cast<std::uint32_t>(data[i]); }
  double real(std::size_t i) const;
  std::vector<double> to_reals() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t element_count(std::span<const std::uint32_t> dims);

}  // namespace xrnpe

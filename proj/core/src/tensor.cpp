#include "xrnpe/tensor.hpp"

#include <bit>
#include <stdexcept>

#include "xrnpe/codec.hpp"
#include "xrnpe/error.hpp"

namespace xrnpe {

FormatSpec format_of(DType dtype) {
  switch (dtype) {
    case DType::Real64: return kReal64;
    case DType::Posit16_1: return kPosit16_1;
    case DType::Posit8_0: return kPosit8_0;
    case DType::Posit4_1: return kPosit4_1;
    case DType::Fp4: return kFp4;
  }
  throw DataError("unknown dtype");
}

DType dtype_of(const FormatSpec& format) {
  if (format.is_real()) return DType::Real64;
  if (format.is_fp4()) return DType::Fp4;
  if (format == kPosit16_1) return DType::Posit16_1;
  if (format == kPosit8_0) return DType::Posit8_0;
  return DType::Posit4_1;
}

int element_bits(DType dtype) { return dtype == DType::Real64 ? 64 : format_of(dtype).n(); }

DType dtype_from_code(std::uint8_t code) {
  if (code > 4) throw DataError("unknown dtype code " + std::to_string(code));
  return static_cast<DType>(code);
}

std::size_t element_count(std::span<const std::uint32_t> dims) {
  std::size_t count = 1;
  for (std::uint32_t d : dims) count *= d;
  return count;
}

Tensor Tensor::zeros(DType dtype, std::vector<std::uint32_t> dims) {
  Tensor t;
  t.dtype = dtype;
  t.data.assign(element_count(dims), 0);
  t.dims = std::move(dims);
  return t;
}

Tensor Tensor::from_reals(std::vector<std::uint32_t> dims, std::span<const double> values) {
  if (element_count(dims) != values.size()) throw DataError("value count does not match shape");
  Tensor t;
  t.dtype = DType::Real64;
  t.dims = std::move(dims);
  t.data.reserve(values.size());
  for (double v : values) t.data.push_back(std::bit_cast<std::uint64_t>(v));
  return t;
}

Tensor Tensor::encode_reals(DType dtype, std::vector<std::uint32_t> dims, std::span<const double> values) {
  if (dtype == DType::Real64) return from_reals(std::move(dims), values);
  if (element_count(dims) != values.size()) throw DataError("value count does not match shape");
  const LatticeRounder rounder(format_of(dtype));
  Tensor t;
  t.dtype = dtype;
  t.dims = std::move(dims);
  t.data.reserve(values.size());
  for (double v : values) t.data.push_back(rounder.round(v));
  return t;
}

double Tensor::real(std::size_t i) const {
  if (dtype == DType::Real64) return std::bit_cast<double>(data[i]);
  return to_double(bits(i), format());
}

std::vector<double> Tensor::to_reals() const {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = real(i);
  return out;
}

}  // namespace xrnpe

// Morphable matrix-multiplication array.
//
// An rows x cols grid of SIMD MAC units computes C = A * B output-stationary:
// every unit owns one output word per tile pass and accumulates the full K
// reduction in its lane quires before a single rounding. In 4-bit mode each
// unit's word carries four adjacent output columns, so a tile covers
// rows x (cols * 4) outputs; Posit(8,0) tiles cover rows x (cols * 2).
//
// Cycle counts are an estimate: one tile-step per K element per tile,
// fill and drain ignored.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "xrnpe/simd_mac.hpp"
#include "xrnpe/tensor.hpp"

namespace xrnpe {

struct ArrayConfig {
  int rows = 8;
  int cols = 8;
  PrecSel sel;
  std::uint64_t k_max = 4096;
  RoundingMode rounding = RoundingMode::PerDot;
  int threads = 1;
  std::optional<FormatSpec> output;  // C format; the lane format when unset

  /// Throws std::invalid_argument unless rows == cols and rows is 8 or 16.
  void validate() const;
  FormatSpec format() const { return sel.lane_format(); }
  FormatSpec output_format() const { return output.value_or(format()); }
};

struct RunStats {
  std::uint64_t mac_ops = 0;
  std::uint64_t operand_gated = 0;
  std::uint64_t rmmec_cells_fired = 0;
  std::uint64_t rmmec_cells_gated = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
  std::uint64_t cycles = 0;
  std::uint64_t tiles = 0;

  /// 2 * mac_ops / (bytes_read + bytes_written); 0 without traffic.
  double effective_ops_per_byte() const;

  RunStats& operator+=(const RunStats& other);
  friend bool operator==(const RunStats&, const RunStats&) = default;
};

struct Traffic {
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
};

/// No-reuse traffic: A streamed once per column tile (ceil(N/cols) times),
/// B once per row tile (ceil(M/rows) times), C written once, all at the
/// operand format's bit width (C at the output format's). Throws std::invalid_argument on zero dims.
Traffic traffic_model(std::uint64_t m, std::uint64_t k, std::uint64_t n, const ArrayConfig& cfg);

struct GemmResult {
  Tensor c;
  RunStats stats;
};

/// C[i,j] = fused dot(row i of A, column j of B), bit-exact with SimdMac::dot.
/// Throws DataError for non-matrix inputs, shape mismatch or a format other
/// than the configured lane format; ContractViolation when K > k_max.
GemmResult gemm(const Tensor& a, const Tensor& b, const ArrayConfig& cfg);

std::string mode_name(const PrecSel& sel);
/// Throws std::invalid_argument for unknown names ("x4_fp4", "x4_posit4",
/// "x2_posit8", "x1_posit16", or a format name).
PrecSel parse_mode(const std::string& name);

/// Serialized counters. Ratios carry an exact rational string next to a
/// float64 approximation.
std::string report_json(const RunStats& stats, const ArrayConfig& cfg);
std::string report_csv(const RunStats& stats, const ArrayConfig& cfg);

}  // namespace xrnpe

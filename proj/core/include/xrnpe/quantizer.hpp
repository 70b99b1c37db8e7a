#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xrnpe/format_spec.hpp"

namespace xrnpe {

/// Round half to even.
double round_half_even(double x);

// ---------------------------------------------------------------------------
// Uniform integer-code quantization with learned saturation thresholds.
// ---------------------------------------------------------------------------

enum class ThresholdRule : std::uint8_t {
  Percentile,  // 0.1 / 99.9 percentiles of W/k
  Symmetric,   // [-1, 1]
};

struct QuantConfig {
  int bits = 8;
  double w_low = -1.0;
  double w_high = 1.0;
  double k = 1.0;
  bool degenerate = false;  // k == 0: all-zero layer, codes are all zero

  std::uint32_t max_code() const { return (std::uint32_t{1} << bits) - 1u; }
  double step() const { return (w_high - w_low) / static_cast<double>(max_code()); }
};

/// k = mean(|W|) * (2^n - 1) / 2^(n-1). Throws std::invalid_argument on an
/// empty vector or n < 2.
double scale_k(std::span<const double> w, int bits);

/// Derives k and the thresholds from the weights. A zero-mean-magnitude layer
/// yields a degenerate config.
QuantConfig make_quant_config(std::span<const double> w, int bits, ThresholdRule rule = ThresholdRule::Percentile);

/// code = round((clip(W/k, W_l, W_h) - W_l) * (2^n - 1) / (W_h - W_l)).
/// Throws std::invalid_argument when k <= 0 on a non-degenerate config or
/// W_l >= W_h.
std::vector<std::uint32_t> quantize(std::span<const double> w, const QuantConfig& cfg);
std::uint32_t quantize_one(double w, const QuantConfig& cfg);

/// Q = code * (W_h - W_l) / (2^n - 1) + W_l, in W/k units. Throws
/// std::out_of_range for codes above 2^n - 1.
std::vector<double> dequantize(std::span<const std::uint32_t> codes, const QuantConfig& cfg);

/// k * dequantize(quantize(w)): the quantized weights back in weight units.
std::vector<double> fake_quantize(std::span<const double> w, const QuantConfig& cfg);

/// Shannon entropy of the code histogram in bits (diagnostic only).
double code_entropy(std::span<const std::uint32_t> codes, int bits);

// ---------------------------------------------------------------------------
// PACT activation clipping.
// ---------------------------------------------------------------------------

/// 0.5 * (|x| - |x - alpha| + alpha). Throws std::invalid_argument for alpha <= 0.
double pact(double x, double alpha);

/// round(pact(x) * (2^n - 1) / alpha) * alpha / (2^n - 1).
double pact_quantize(double x, double alpha, int bits);

// ---------------------------------------------------------------------------
// Format-lattice quantization (posit / FP4 weights).
// ---------------------------------------------------------------------------

/// Power-of-two scale that maps a tensor onto a format's useful range:
/// FP4 aligns the absolute maximum with the top binade (shared-exponent
/// style); posits centre the mean magnitude at 1. Returns 1 for all-zero input.
double power_of_two_scale(std::span<const double> values, const FormatSpec& format);

/// scale * decode(encode(w / scale)) elementwise with the power-of-two scale.
std::vector<double> lattice_quantize(std::span<const double> w, const FormatSpec& format);

// ---------------------------------------------------------------------------
// Layer-adaptive precision.
// ---------------------------------------------------------------------------

struct LayerTensor {
  std::string id;
  std::vector<double> weights;
  std::vector<double> grad;  // empty when no gradient is available

  std::size_t param_count() const { return weights.size(); }
};

struct LayerSize {
  std::string id;
  std::uint64_t params = 0;
};

struct LayerAssignment {
  std::string id;
  FormatSpec weights = kReal64;
  FormatSpec activations = kReal64;
};

struct PrecisionMap {
  std::vector<LayerAssignment> layers;

  /// Throws DataError when the layer is missing.
  const LayerAssignment& at(const std::string& id) const;
  const LayerAssignment* find(const std::string& id) const;

  static PrecisionMap uniform(std::span<const std::string> ids, const FormatSpec& format);
};

enum class QuantScheme : std::uint8_t {
  UniformCode,    // integer codes at the format's bit width, thresholds per rule
  FormatLattice,  // nearest value of the format with a power-of-two scale
};

struct SensitivityOptions {
  QuantScheme scheme = QuantScheme::UniformCode;
  ThresholdRule thresholds = ThresholdRule::Percentile;
  FormatSpec four_bit = kFp4;  // 4-bit candidate format
};

/// Quantized weights (weight units) of a layer held in `format`. Real64 is
/// the identity.
std::vector<double> quantize_for_format(std::span<const double> w, const FormatSpec& format,
                                        const SensitivityOptions& options);

/// Candidate format for a bit budget: 16 -> Posit(16,1), 8 -> Posit(8,0),
/// 4 -> options.four_bit.
FormatSpec candidate_format(int bits, const SensitivityOptions& options);

/// s_{l,sc,k} = (||Q(w) - w|| - ||Q'_k(w) - w||) * ||grad|| / n_l with L2
/// norms; Q uses the layer's current assignment, Q'_k the k-bit candidate.
/// Throws DataError when the gradient is missing or mis-shaped.
double layer_sensitivity(const LayerTensor& layer, const PrecisionMap& current, int candidate_bits,
                         const SensitivityOptions& options = {});

/// s_l = max(s_8, s_4).
double layer_score(double s8, double s4);

struct SensitivityEntry {
  std::string id;
  double s8 = 0.0;
  double s4 = 0.0;
  double score = 0.0;
};

struct SensitivityReport {
  std::vector<SensitivityEntry> layers;  // model order
  std::vector<std::string> ranking;      // ascending score, ties by id

  const SensitivityEntry* find(const std::string& id) const;
};

SensitivityReport sensitivity_report(std::span<const LayerTensor> layers, const PrecisionMap& current,
                                     const SensitivityOptions& options = {});

/// Parameter-weighted average storage bits of a map.
double average_bits(std::span<const LayerSize> layers, const PrecisionMap& map);

/// Walks layers by ascending score: a layer drops to 8 bits if that alone
/// meets the budget, otherwise to 4 bits, until the parameter-weighted
/// average is within budget. Untouched layers stay Posit(16,1). Activations
/// follow the weight format. Throws std::invalid_argument for budget < 4
/// and DataError for layers missing from the report.
PrecisionMap assign_precisions(std::span<const LayerSize> layers, const SensitivityReport& report, double budget,
                               const FormatSpec& four_bit = kFp4);

struct ModelSize {
  std::uint64_t weight_bits = 0;
  std::uint64_t metadata_bytes = 0;  // one 32-bit scale per layer
  double total_bytes() const { return static_cast<double>(weight_bits) / 8.0 + static_cast<double>(metadata_bytes); }
  double weight_bytes() const { return static_cast<double>(weight_bits) / 8.0; }
};

/// Sum of n_l * bits(format_l) / 8 plus metadata. Throws DataError for an
/// incomplete map.
ModelSize model_size_bytes(std::span<const LayerSize> layers, const PrecisionMap& map);

std::vector<LayerSize> layer_sizes(std::span<const LayerTensor> layers);

}  // namespace xrnpe

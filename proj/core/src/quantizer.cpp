#include "xrnpe/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "xrnpe/codec.hpp"
#include "xrnpe/error.hpp"

namespace xrnpe {

namespace {

void require_bits(int bits) {
  if (bits < 2 || bits > 31) throw std::invalid_argument("bit width must be in [2, 31]");
}

// Linear-interpolated percentile of sorted data, p in [0, 100].
double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double l2_norm(std::span<const double> a) {
  double sum = 0.0;
  for (double v : a) sum += v * v;
  return std::sqrt(sum);
}

}  // namespace

double round_half_even(double x) { return std::nearbyint(x); }

double scale_k(std::span<const double> w, int bits) {
  if (w.empty()) throw std::invalid_argument("scale_k of an empty tensor");
  require_bits(bits);
  double sum = 0.0;
  for (double v : w) sum += std::fabs(v);
  const double mean = sum / static_cast<double>(w.size());
  const double levels = std::ldexp(1.0, bits) - 1.0;
  return mean * levels / std::ldexp(1.0, bits - 1);
}

QuantConfig make_quant_config(std::span<const double> w, int bits, ThresholdRule rule) {
  QuantConfig cfg;
  cfg.bits = bits;
  cfg.k = scale_k(w, bits);
  if (cfg.k == 0.0) {
    cfg.degenerate = true;
    return cfg;
  }
  if (rule == ThresholdRule::Percentile) {
    std::vector<double> normalized(w.size());
    std::transform(w.begin(), w.end(), normalized.begin(), [&](double v) { return v / cfg.k; });
    std::sort(normalized.begin(), normalized.end());
    const double low = percentile(normalized, 0.1);
    const double high = percentile(normalized, 99.9);
    if (low < high) {
      cfg.w_low = low;
      cfg.w_high = high;
    }
  }
  return cfg;
}

std::uint32_t quantize_one(double w, const QuantConfig& cfg) {
  if (cfg.degenerate) return 0;
  if (!(cfg.k > 0.0)) throw std::invalid_argument("quantize: scale k must be positive");
  if (!(cfg.w_low < cfg.w_high)) throw std::invalid_argument("quantize: W_l must be below W_h");
  const double clipped = std::clamp(w / cfg.k, cfg.w_low, cfg.w_high);
  const double levels = static_cast<double>(cfg.max_code());
  const double code = round_half_even((clipped - cfg.w_low) * levels / (cfg.w_high - cfg.w_low));
  return static_cast<std::uint32_t>(std::clamp(code, 0.0, levels));
}

std::vector<std::uint32_t> quantize(std::span<const double> w, const QuantConfig& cfg) {
  require_bits(cfg.bits);
  std::vector<std::uint32_t> codes;
  codes.reserve(w.size());
  for (double v : w) codes.push_back(quantize_one(v, cfg));
  return codes;
}

std::vector<double> dequantize(std::span<const std::uint32_t> codes, const QuantConfig& cfg) {
  std::vector<double> out;
  out.reserve(codes.size());
  const double levels = static_cast<double>(cfg.max_code());
  for (std::uint32_t code : codes) {
    if (code > cfg.max_code()) throw std::out_of_range("code exceeds 2^n - 1");
    if (cfg.degenerate) {
      out.push_back(0.0);
      continue;
    }
    out.push_back(static_cast<double>(code) * (cfg.w_high - cfg.w_low) / levels + cfg.w_low);
  }
  return out;
}

std::vector<double> fake_quantize(std::span<const double> w, const QuantConfig& cfg) {
  std::vector<double> q = dequantize(quantize(w, cfg), cfg);
  for (double& v : q) v *= cfg.k;
  return q;
}

double code_entropy(std::span<const std::uint32_t> codes, int bits) {
  if (codes.empty()) return 0.0;
  std::vector<std::uint64_t> histogram(std::size_t{1} << bits, 0);
  for (std::uint32_t c : codes) ++histogram.at(c);
  double entropy = 0.0;
  const auto total = static_cast<double>(codes.size());
  for (std::uint64_t count : histogram) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / total;
    entropy -= p * std::log2(p);
  }
  return entropy;
}

double pact(double x, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("PACT alpha must be positive");
  return 0.5 * (std::fabs(x) - std::fabs(x - alpha) + alpha);
}

double pact_quantize(double x, double alpha, int bits) {
  require_bits(bits);
  const double y = pact(x, alpha);
  const double levels = std::ldexp(1.0, bits) - 1.0;
  return round_half_even(y * levels / alpha) * alpha / levels;
}

double power_of_two_scale(std::span<const double> values, const FormatSpec& format) {
  if (format.is_real()) return 1.0;
  double amax = 0.0;
  double sum = 0.0;
  for (double v : values) {
    amax = std::max(amax, std::fabs(v));
    sum += std::fabs(v);
  }
  if (amax == 0.0 || values.empty()) return 1.0;
  if (format.is_fp4()) {
    return std::ldexp(1.0, std::ilogb(amax) - format.max_scale());
  }
  const double mean = sum / static_cast<double>(values.size());
  return std::ldexp(1.0, static_cast<int>(std::lround(std::log2(mean))));
}

std::vector<double> lattice_quantize(std::span<const double> w, const FormatSpec& format) {
  if (format.is_real()) return {w.begin(), w.end()};
  const double scale = power_of_two_scale(w, format);
  const LatticeRounder rounder(format);
  std::vector<double> out;
  out.reserve(w.size());
  for (double v : w) out.push_back(scale * rounder.value(rounder.round(v / scale)));
  return out;
}

const LayerAssignment* PrecisionMap::find(const std::string& id) const {
  for (const LayerAssignment& a : layers) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const LayerAssignment& PrecisionMap::at(const std::string& id) const {
  if (const LayerAssignment* a = find(id)) return *a;
  throw DataError("precision map has no entry for layer '" + id + "'");
}

PrecisionMap PrecisionMap::uniform(std::span<const std::string> ids, const FormatSpec& format) {
  PrecisionMap map;
  for (const std::string& id : ids) map.layers.push_back({id, format, format});
  return map;
}

std::vector<double> quantize_for_format(std::span<const double> w, const FormatSpec& format,
                                        const SensitivityOptions& options) {
  if (format.is_real() || w.empty()) return {w.begin(), w.end()};
  if (options.scheme == QuantScheme::FormatLattice) return lattice_quantize(w, format);
  return fake_quantize(w, make_quant_config(w, format.n(), options.thresholds));
}

FormatSpec candidate_format(int bits, const SensitivityOptions& options) {
  switch (bits) {
    case 16: return kPosit16_1;
    case 8: return kPosit8_0;
    case 4: return options.four_bit;
    default: break;
  }
  throw std::invalid_argument("candidate bit width must be 4, 8 or 16");
}

double layer_sensitivity(const LayerTensor& layer, const PrecisionMap& current, int candidate_bits,
                         const SensitivityOptions& options) {
  if (layer.grad.empty()) throw DataError("layer '" + layer.id + "' has no gradient");
  if (layer.grad.size() != layer.weights.size()) {
    throw DataError("layer '" + layer.id + "' gradient shape does not match weights");
  }
  if (layer.weights.empty()) throw DataError("layer '" + layer.id + "' has no parameters");
  const FormatSpec assigned = current.at(layer.id).weights;
  const FormatSpec candidate = candidate_format(candidate_bits, options);
  const std::vector<double> q_current = quantize_for_format(layer.weights, assigned, options);
  const std::vector<double> q_candidate = quantize_for_format(layer.weights, candidate, options);
  const double current_error = l2_distance(q_current, layer.weights);
  const double candidate_error = l2_distance(q_candidate, layer.weights);
  return (current_error - candidate_error) * l2_norm(layer.grad) / static_cast<double>(layer.param_count());
}

double layer_score(double s8, double s4) { return std::max(s8, s4); }

const SensitivityEntry* SensitivityReport::find(const std::string& id) const {
  for (const SensitivityEntry& e : layers) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

SensitivityReport sensitivity_report(std::span<const LayerTensor> layers, const PrecisionMap& current,
                                     const SensitivityOptions& options) {
  SensitivityReport report;
  for (const LayerTensor& layer : layers) {
    SensitivityEntry e;
    e.id = layer.id;
    e.s8 = layer_sensitivity(layer, current, 8, options);
    e.s4 = layer_sensitivity(layer, current, 4, options);
    e.score = layer_score(e.s8, e.s4);
    report.layers.push_back(e);
  }
  std::vector<const SensitivityEntry*> order;
  for (const SensitivityEntry& e : report.layers) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(), [](const SensitivityEntry* a, const SensitivityEntry* b) {
    if (a->score != b->score) return a->score < b->score;
    return a->id < b->id;
  });
  for (const SensitivityEntry* e : order) report.ranking.push_back(e->id);
  return report;
}

double average_bits(std::span<const LayerSize> layers, const PrecisionMap& map) {
  std::uint64_t params = 0;
  std::uint64_t bits = 0;
  for (const LayerSize& l : layers) {
    params += l.params;
    bits += l.params * static_cast<std::uint64_t>(map.at(l.id).weights.storage_bits());
  }
  return params == 0 ? 0.0 : static_cast<double>(bits) / static_cast<double>(params);
}

PrecisionMap assign_precisions(std::span<const LayerSize> layers, const SensitivityReport& report, double budget,
                               const FormatSpec& four_bit) {
  if (!(budget >= 4.0)) throw std::invalid_argument("budget below 4 bits per parameter is infeasible");
  std::map<std::string, int> bits;
  std::uint64_t total_params = 0;
  std::uint64_t total_bits = 0;
  for (const LayerSize& l : layers) {
    bits[l.id] = 16;
    total_params += l.params;
    total_bits += 16 * l.params;
  }
  const auto within = [&](std::uint64_t b) {
    return static_cast<long double>(b) <= static_cast<long double>(budget) * static_cast<long double>(total_params);
  };

  std::vector<std::pair<double, std::string>> order;
  for (const LayerSize& l : layers) {
    const SensitivityEntry* e = report.find(l.id);
    if (e == nullptr) throw DataError("sensitivity report has no entry for layer '" + l.id + "'");
    order.emplace_back(e->score, l.id);
  }
  std::sort(order.begin(), order.end());

  for (const auto& [score, id] : order) {
    if (within(total_bits)) break;
    const auto it = std::find_if(layers.begin(), layers.end(), [&](const LayerSize& l) { return l.id == id; });
    const std::uint64_t params = it->params;
    const std::uint64_t at8 = total_bits - 8 * params;
    if (within(at8)) {
      bits[id] = 8;
      total_bits = at8;
      break;
    }
    bits[id] = 4;
    total_bits -= 12 * params;
  }

  PrecisionMap map;
  for (const LayerSize& l : layers) {
    const int b = bits[l.id];
    const FormatSpec f = b == 16 ? kPosit16_1 : (b == 8 ? kPosit8_0 : four_bit);
    map.layers.push_back({l.id, f, f});
  }
  return map;
}

ModelSize model_size_bytes(std::span<const LayerSize> layers, const PrecisionMap& map) {
  ModelSize size;
  for (const LayerSize& l : layers) {
    size.weight_bits += l.params * static_cast<std::uint64_t>(map.at(l.id).weights.storage_bits());
    size.metadata_bytes += 4;
  }
  return size;
}

std::vector<LayerSize> layer_sizes(std::span<const LayerTensor> layers) {
  std::vector<LayerSize> out;
  for (const LayerTensor& l : layers) out.push_back({l.id, l.param_count()});
  return out;
}

}  // namespace xrnpe

// Training loops, quantized inference on the morph array, and evaluation.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "xrnpe/dataset.hpp"
#include "xrnpe/morph_array.hpp"
#include "xrnpe/network.hpp"
#include "xrnpe/quantizer.hpp"

namespace xrnpe::nn {

/// Sum of per-chunk gradients over fixed 16-row chunks, reduced in chunk
/// order, so the result does not depend on `threads`.
struct BatchGradients {
  Gradients grads;
  double loss = 0.0;
};
BatchGradients batch_gradients(const Network& net, const Batch& batch, const QuantPlan* plan, int threads);

/// Static power-of-two scales for every layer input and output, taken from a
/// full-precision pass over `calibration`. Layers missing from the map throw
/// DataError.
QuantPlan calibrate(const Network& net, const Matrix& calibration, const PrecisionMap& map);

struct QuantizedForward {
  Matrix outputs;
  RunStats stats;                  // summed over layers
  std::vector<RunStats> per_layer; // zero for Real64 layers
};

/// Each non-Real64 layer runs its GEMM on the array in the layer's weight
/// format: inputs and weights are encoded with power-of-two scales, the array
/// rounds each fused dot once into `cfg.output` (Posit(16,1) when unset),
/// bias and activation are applied in double and the result is re-encoded in
/// the layer's activation format. cfg.sel is overridden per layer.
QuantizedForward forward_quantized(const Network& net, const Matrix& x, const PrecisionMap& map,
                                   const QuantPlan& plan, const ArrayConfig& cfg);
/// Calibrates on `x` itself.
QuantizedForward forward_quantized(const Network& net, const Matrix& x, const PrecisionMap& map,
                                   const ArrayConfig& cfg);

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;  // shuffling
  int threads = 1;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;      // mean training loss over the epoch's batches
  double accuracy = 0.0;  // training-split accuracy after the epoch (RMSE for regression)
};

using TrainHistory = std::vector<EpochRecord>;

/// Thrown when the loss becomes NaN or infinite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plain SGD on the training split; weights, biases and PACT alpha are updated.
TrainHistory train_reference(Network& net, const Dataset& data, const TrainConfig& cfg);

/// SGD with the quantized forward pass (fake quantization in double) and
/// straight-through gradients applied to the full-precision weights.
/// Activation scales are calibrated once on the training split before the
/// first epoch.
TrainHistory qat_train(Network& net, const Dataset& data, const PrecisionMap& map, const TrainConfig& cfg);

struct EvalResult {
  std::size_t samples = 0;
  std::size_t correct = 0;  // classification only
  double accuracy = 0.0;    // classification
  double rmse = 0.0;        // regression
  bool quantized = false;
  RunStats stats;           // quantized runs only
};

/// Metric on `rows` of the dataset (the test split by default). With a map
/// the quantized array path is used, calibrated on the training split.
EvalResult evaluate(const Network& net, const Dataset& data, const PrecisionMap* map = nullptr,
                    const ArrayConfig& cfg = {});
EvalResult evaluate_rows(const Network& net, const Dataset& data, std::span<const std::size_t> rows,
                         const PrecisionMap* map, const ArrayConfig& cfg);

/// Metric from logits.
EvalResult score(const Matrix& logits, const Batch& batch);

}  // namespace xrnpe::nn

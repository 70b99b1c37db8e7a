// Small feed-forward networks in double precision: dense and 2-D convolution
// layers, forward pass, analytic backward pass.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xrnpe/quantizer.hpp"

namespace xrnpe::nn {

/// Row-major batch matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

enum class LayerKind : std::uint8_t { Dense, Conv2d };
enum class Activation : std::uint8_t { None, Relu, Pact };
enum class LossKind : std::uint8_t { CrossEntropy, Mse };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);
std::string to_string(LossKind loss);
/// Throw DataError on unknown names.
LayerKind parse_layer_kind(const std::string& name);
Activation parse_activation(const std::string& name);
LossKind parse_loss(const std::string& name);

/// Input is channel-major C x H x W per sample, no padding.
struct ConvShape {
  int in_channels = 1;
  int in_height = 1;
  int in_width = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;

  int out_height() const { return (in_height - kernel) / stride + 1; }
  int out_width() const { return (in_width - kernel) / stride + 1; }
  std::size_t positions() const { return static_cast<std::size_t>(out_height()) * static_cast<std::size_t>(out_width()); }
  std::size_t patch() const {
    return static_cast<std::size_t>(in_channels) * static_cast<std::size_t>(kernel) * static_cast<std::size_t>(kernel);
  }
  std::size_t in_size() const {
    return static_cast<std::size_t>(in_channels) * static_cast<std::size_t>(in_height) *
           static_cast<std::size_t>(in_width);
  }
  std::size_t out_size() const { return static_cast<std::size_t>(out_channels) * positions(); }
  void validate() const;
};

struct Layer {
  std::string id;
  LayerKind kind = LayerKind::Dense;
  std::size_t in = 0;   // flattened input features
  std::size_t out = 0;  // flattened output features
  ConvShape conv;       // Conv2d only
  Activation activation = Activation::Relu;
  double alpha = 6.0;   // PACT clip level
  // Dense: out x in. Conv2d: out_channels x patch. Row-major.
  std::vector<double> weights;
  std::vector<double> bias;  // out (dense) or out_channels (conv)

  std::size_t weight_rows() const { return kind == LayerKind::Dense ? out : static_cast<std::size_t>(conv.out_channels); }
  std::size_t weight_cols() const { return kind == LayerKind::Dense ? in : conv.patch(); }
  std::size_t param_count() const { return weights.size(); }

  static Layer dense(std::string id, std::size_t in, std::size_t out, Activation act);
  static Layer conv2d(std::string id, const ConvShape& shape, Activation act);
};

struct Network {
  std::vector<Layer> layers;
  LossKind loss = LossKind::CrossEntropy;

  std::size_t input_size() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_size() const { return layers.empty() ? 0 : layers.back().out; }
  std::vector<std::string> ids() const;
  /// Throws DataError on inconsistent chaining, parameter sizes or ids.
  void validate() const;
  /// Weights paired with gradients (empty grads when `grads` is empty).
  std::vector<LayerTensor> layer_tensors(std::span<const std::vector<double>> grads = {}) const;
  std::vector<LayerSize> sizes() const;
};

/// He-normal weights, zero biases.
void init_weights(Network& net, std::uint64_t seed);

struct Batch {
  Matrix x;
  std::vector<int> labels;  // CrossEntropy
  Matrix targets;           // Mse

  std::size_t size() const { return x.rows; }
};

/// Per-layer fake quantization applied inside the double-precision pass.
/// Formats set to Real64 are the identity.
struct LayerQuant {
  FormatSpec weights = kReal64;
  FormatSpec activations = kReal64;
  double input_scale = 1.0;   // power-of-two scale of the layer input
  double output_scale = 1.0;  // power-of-two scale of the layer output
};

struct QuantPlan {
  std::vector<LayerQuant> layers;
};

struct LayerTrace {
  Matrix input;       // after input quantization
  Matrix pre;         // pre-activation
  Matrix output;      // after activation and output quantization
  std::vector<double> weights;  // effective weights
  std::vector<std::uint8_t> input_pass;   // STE masks, empty = all pass
  std::vector<std::uint8_t> weight_pass;
  std::vector<std::uint8_t> output_pass;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  Matrix logits;
  double loss = 0.0;  // summed over the batch, divided by `normalizer`
};

/// Loss is averaged over `normalizer` samples (the batch size when 0), so
/// sums over sub-batches give the full-batch value.
ForwardTrace forward(const Network& net, const Batch& batch, const QuantPlan* plan = nullptr,
                     std::size_t normalizer = 0);

inline ForwardTrace forward_reference(const Network& net, const Batch& batch) { return forward(net, batch); }

/// Logits only.
Matrix predict(const Network& net, const Matrix& x);

struct LayerGrad {
  std::vector<double> weights;
  std::vector<double> bias;
  double alpha = 0.0;
};

struct Gradients {
  std::vector<LayerGrad> layers;

  Gradients& operator+=(const Gradients& other);
};

Gradients zero_gradients(const Network& net);

/// Analytic gradients of trace.loss. Quantizers pass gradients straight
/// through where the value was inside the representable range.
Gradients backward(const Network& net, const Batch& batch, const ForwardTrace& trace,
                   std::size_t normalizer = 0);

/// Softmax cross-entropy (mean) or half squared error (mean over samples).
double loss_value(LossKind loss, const Matrix& logits, const Batch& batch, std::size_t normalizer = 0);

}  // namespace xrnpe::nn

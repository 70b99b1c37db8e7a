#include "xrnpe/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "xrnpe/codec.hpp"
#include "xrnpe/error.hpp"
#include "xrnpe/rng.hpp"
#include "nn_detail.hpp"

namespace xrnpe::nn {

std::string to_string(LayerKind kind) { return kind == LayerKind::Dense ? "dense" : "conv2d"; }

std::string to_string(Activation act) {
  switch (act) {
    case Activation::None: return "none";
    case Activation::Relu: return "relu";
    case Activation::Pact: return "pact";
  }
  return "none";
}

std::string to_string(LossKind loss) { return loss == LossKind::CrossEntropy ? "cross_entropy" : "mse"; }

LayerKind parse_layer_kind(const std::string& name) {
  if (name == "dense") return LayerKind::Dense;
  if (name == "conv2d") return LayerKind::Conv2d;
  throw DataError("unknown layer kind '" + name + "'");
}

Activation parse_activation(const std::string& name) {
  if (name == "none") return Activation::None;
  if (name == "relu") return Activation::Relu;
  if (name == "pact") return Activation::Pact;
  throw DataError("unknown activation '" + name + "'");
}

LossKind parse_loss(const std::string& name) {
  if (name == "cross_entropy" || name == "ce") return LossKind::CrossEntropy;
  if (name == "mse") return LossKind::Mse;
  throw DataError("unknown loss '" + name + "'");
}

void ConvShape::validate() const {
  if (in_channels < 1 || in_height < 1 || in_width < 1 || out_channels < 1 || kernel < 1 || stride < 1) {
    throw DataError("conv shape fields must be positive");
  }
  if (kernel > in_height || kernel > in_width) throw DataError("conv kernel larger than its input");
}

Layer Layer::dense(std::string id, std::size_t in, std::size_t out, Activation act) {
  Layer l;
  l.id = std::move(id);
  l.kind = LayerKind::Dense;
  l.in = in;
  l.out = out;
  l.activation = act;
  l.weights.assign(in * out, 0.0);
  l.bias.assign(out, 0.0);
  return l;
}

Layer Layer::conv2d(std::string id, const ConvShape& shape, Activation act) {
  shape.validate();
  Layer l;
  l.id = std::move(id);
  l.kind = LayerKind::Conv2d;
  l.conv = shape;
  l.in = shape.in_size();
  l.out = shape.out_size();
  l.activation = act;
  l.weights.assign(static_cast<std::size_t>(shape.out_channels) * shape.patch(), 0.0);
  l.bias.assign(static_cast<std::size_t>(shape.out_channels), 0.0);
  return l;
}

std::vector<std::string> Network::ids() const {
  std::vector<std::string> out;
  out.reserve(layers.size());
  for (const Layer& l : layers) out.push_back(l.id);
  return out;
}

void Network::validate() const {
  if (layers.empty()) throw DataError("network has no layers");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    if (l.id.empty()) throw DataError("layer " + std::to_string(i) + " has an empty id");
    if (!seen.insert(l.id).second) throw DataError("duplicate layer id '" + l.id + "'");
    if (l.kind == LayerKind::Conv2d) {
      l.conv.validate();
      if (l.in != l.conv.in_size() || l.out != l.conv.out_size()) {
        throw DataError("layer '" + l.id + "' sizes do not match its conv shape");
      }
    }
    if (l.in == 0 || l.out == 0) throw DataError("layer '" + l.id + "' has a zero dimension");
    if (l.weights.size() != l.weight_rows() * l.weight_cols()) {
      throw DataError("layer '" + l.id + "' has " + std::to_string(l.weights.size()) + " weights, expected " +
                      std::to_string(l.weight_rows() * l.weight_cols()));
    }
    if (l.bias.size() != l.weight_rows()) throw DataError("layer '" + l.id + "' bias size mismatch");
    if (l.activation == Activation::Pact && !(l.alpha > 0.0)) {
      throw DataError("layer '" + l.id + "' PACT alpha must be positive");
    }
    if (i > 0 && layers[i - 1].out != l.in) {
      throw DataError("layer '" + l.id + "' expects " + std::to_string(l.in) + " inputs, previous layer gives " +
                      std::to_string(layers[i - 1].out));
    }
  }
}

std::vector<LayerTensor> Network::layer_tensors(std::span<const std::vector<double>> grads) const {
  if (!grads.empty() && grads.size() != layers.size()) throw DataError("gradient count does not match layers");
  std::vector<LayerTensor> out;
  out.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    out.push_back({layers[i].id, layers[i].weights, grads.empty() ? std::vector<double>{} : grads[i]});
  }
  return out;
}

std::vector<LayerSize> Network::sizes() const {
  std::vector<LayerSize> out;
  for (const Layer& l : layers) out.push_back({l.id, l.param_count()});
  return out;
}

void init_weights(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  for (Layer& l : net.layers) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(l.weight_cols()));
    for (double& w : l.weights) w = rng.normal(0.0, stddev);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

namespace detail {

const LatticeRounder& rounder_for(const FormatSpec& format) {
  static const LatticeRounder p16(kPosit16_1);
  static const LatticeRounder p8(kPosit8_0);
  static const LatticeRounder p4(kPosit4_1);
  static const LatticeRounder fp4(kFp4);
  if (format == kPosit16_1) return p16;
  if (format == kPosit8_0) return p8;
  if (format == kPosit4_1) return p4;
  if (format.is_fp4()) return fp4;
  throw std::invalid_argument("no lattice for " + format.name());
}

void fake_quantize(std::span<double> values, const FormatSpec& format, double scale, std::vector<std::uint8_t>* pass) {
  if (format.is_real()) return;
  const LatticeRounder& r = rounder_for(format);
  const double limit = r.max_value();
  if (pass) pass->assign(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = values[i] / scale;
    if (pass && std::fabs(u) > limit) (*pass)[i] = 0;
    values[i] = scale * r.value(r.round(u));
  }
}

std::vector<double> im2col(std::span<const double> sample, const ConvShape& s) {
  const std::size_t positions = s.positions();
  const std::size_t patch = s.patch();
  std::vector<double> col(positions * patch);
  const int ow = s.out_width();
  for (std::size_t p = 0; p < positions; ++p) {
    const int oy = static_cast<int>(p) / ow;
    const int ox = static_cast<int>(p) % ow;
    std::size_t q = 0;
    for (int c = 0; c < s.in_channels; ++c) {
      for (int ky = 0; ky < s.kernel; ++ky) {
        const int y = oy * s.stride + ky;
        for (int kx = 0; kx < s.kernel; ++kx, ++q) {
          const int x = ox * s.stride + kx;
          col[p * patch + q] = sample[(static_cast<std::size_t>(c) * static_cast<std::size_t>(s.in_height) +
                                       static_cast<std::size_t>(y)) *
                                          static_cast<std::size_t>(s.in_width) +
                                      static_cast<std::size_t>(x)];
        }
      }
    }
  }
  return col;
}

void col2im_add(std::span<const double> col, const ConvShape& s, std::span<double> sample) {
  const std::size_t positions = s.positions();
  const std::size_t patch = s.patch();
  const int ow = s.out_width();
  for (std::size_t p = 0; p < positions; ++p) {
    const int oy = static_cast<int>(p) / ow;
    const int ox = static_cast<int>(p) % ow;
    std::size_t q = 0;
    for (int c = 0; c < s.in_channels; ++c) {
      for (int ky = 0; ky < s.kernel; ++ky) {
        const int y = oy * s.stride + ky;
        for (int kx = 0; kx < s.kernel; ++kx, ++q) {
          const int x = ox * s.stride + kx;
          sample[(static_cast<std::size_t>(c) * static_cast<std::size_t>(s.in_height) + static_cast<std::size_t>(y)) *
                     static_cast<std::size_t>(s.in_width) +
                 static_cast<std::size_t>(x)] += col[p * patch + q];
        }
      }
    }
  }
}

double activate(Activation act, double x, double alpha) {
  switch (act) {
    case Activation::None: return x;
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Pact: return pact(x, alpha);
  }
  return x;
}

void layer_pre(const Layer& l, const Matrix& x, std::span<const double> w, Matrix& pre) {
  pre = Matrix(x.rows, l.out);
  if (l.kind == LayerKind::Dense) {
    for (std::size_t b = 0; b < x.rows; ++b) {
      const auto xr = x.row(b);
      for (std::size_t o = 0; o < l.out; ++o) {
        double acc = l.bias[o];
        const double* wr = w.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) acc += wr[i] * xr[i];
        pre.at(b, o) = acc;
      }
    }
    return;
  }
  const ConvShape& s = l.conv;
  const std::size_t positions = s.positions();
  const std::size_t patch = s.patch();
  for (std::size_t b = 0; b < x.rows; ++b) {
    const std::vector<double> col = im2col(x.row(b), s);
    for (int oc = 0; oc < s.out_channels; ++oc) {
      const double* wr = w.data() + static_cast<std::size_t>(oc) * patch;
      for (std::size_t p = 0; p < positions; ++p) {
        double acc = l.bias[static_cast<std::size_t>(oc)];
        const double* cr = col.data() + p * patch;
        for (std::size_t q = 0; q < patch; ++q) acc += wr[q] * cr[q];
        pre.at(b, static_cast<std::size_t>(oc) * positions + p) = acc;
      }
    }
  }
}

}  // namespace detail

double loss_value(LossKind loss, const Matrix& logits, const Batch& batch, std::size_t normalizer) {
  const double n = static_cast<double>(normalizer == 0 ? logits.rows : normalizer);
  double total = 0.0;
  if (loss == LossKind::CrossEntropy) {
    if (batch.labels.size() != logits.rows) throw DataError("label count does not match batch");
    for (std::size_t b = 0; b < logits.rows; ++b) {
      const auto z = logits.row(b);
      const int label = batch.labels[b];
      if (label < 0 || static_cast<std::size_t>(label) >= logits.cols) {
        throw DataError("label " + std::to_string(label) + " out of range");
      }
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - zmax);
      total += std::log(sum) + zmax - z[static_cast<std::size_t>(label)];
    }
  } else {
    if (batch.targets.rows != logits.rows || batch.targets.cols != logits.cols) {
      throw DataError("target shape does not match network output");
    }
    for (std::size_t i = 0; i < logits.data.size(); ++i) {
      const double d = logits.data[i] - batch.targets.data[i];
      total += 0.5 * d * d;
    }
  }
  return total / n;
}

ForwardTrace forward(const Network& net, const Batch& batch, const QuantPlan* plan, std::size_t normalizer) {
  if (batch.x.cols != net.input_size()) {
    throw DataError("batch has " + std::to_string(batch.x.cols) + " features, network expects " +
                    std::to_string(net.input_size()));
  }
  if (plan && plan->layers.size() != net.layers.size()) throw DataError("quant plan does not match network");
  ForwardTrace trace;
  trace.layers.resize(net.layers.size());
  const Matrix* current = &batch.x;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& l = net.layers[li];
    LayerTrace& t = trace.layers[li];
    t.input = *current;
    t.weights = l.weights;
    const bool last = li + 1 == net.layers.size();
    if (plan) {
      const LayerQuant& q = plan->layers[li];
      if (!q.weights.is_real()) {
        detail::fake_quantize(t.input.data, q.weights, q.input_scale, &t.input_pass);
        detail::fake_quantize(t.weights, q.weights, power_of_two_scale(l.weights, q.weights), &t.weight_pass);
      }
    }
    detail::layer_pre(l, t.input, t.weights, t.pre);
    t.output = t.pre;
    for (double& v : t.output.data) v = detail::activate(l.activation, v, l.alpha);
    if (plan && !last) {
      const LayerQuant& q = plan->layers[li];
      if (!q.activations.is_real()) {
        detail::fake_quantize(t.output.data, q.activations, q.output_scale, &t.output_pass);
      }
    }
    current = &t.output;
  }
  trace.logits = *current;
  trace.loss = loss_value(net.loss, trace.logits, batch, normalizer);
  return trace;
}

Matrix predict(const Network& net, const Matrix& x) {
  Matrix cur = x;
  for (const Layer& l : net.layers) {
    Matrix pre;
    detail::layer_pre(l, cur, l.weights, pre);
    for (double& v : pre.data) v = detail::activate(l.activation, v, l.alpha);
    cur = std::move(pre);
  }
  return cur;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.layers.size() != layers.size()) throw std::invalid_argument("gradient layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (std::size_t j = 0; j < layers[i].weights.size(); ++j) layers[i].weights[j] += other.layers[i].weights[j];
    for (std::size_t j = 0; j < layers[i].bias.size(); ++j) layers[i].bias[j] += other.layers[i].bias[j];
    layers[i].alpha += other.layers[i].alpha;
  }
  return *this;
}

Gradients zero_gradients(const Network& net) {
  Gradients g;
  for (const Layer& l : net.layers) g.layers.push_back({std::vector<double>(l.weights.size(), 0.0),
                                                        std::vector<double>(l.bias.size(), 0.0), 0.0});
  return g;
}

Gradients backward(const Network& net, const Batch& batch, const ForwardTrace& trace, std::size_t normalizer) {
  if (trace.layers.size() != net.layers.size()) throw DataError("trace does not match network");
  const std::size_t rows = trace.logits.rows;
  const double n = static_cast<double>(normalizer == 0 ? rows : normalizer);
  Gradients grads = zero_gradients(net);

  // dL/dlogits
  Matrix g(rows, trace.logits.cols);
  if (net.loss == LossKind::CrossEntropy) {
    for (std::size_t b = 0; b < rows; ++b) {
      const auto z = trace.logits.row(b);
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - zmax);
      for (std::size_t c = 0; c < z.size(); ++c) g.at(b, c) = std::exp(z[c] - zmax) / sum / n;
      g.at(b, static_cast<std::size_t>(batch.labels[b])) -= 1.0 / n;
    }
  } else {
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = (trace.logits.data[i] - batch.targets.data[i]) / n;
  }

  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& l = net.layers[li];
    const LayerTrace& t = trace.layers[li];
    LayerGrad& lg = grads.layers[li];
    if (!t.output_pass.empty()) {
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        if (!t.output_pass[i]) g.data[i] = 0.0;
      }
    }
    // Through the activation.
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      const double x = t.pre.data[i];
      switch (l.activation) {
        case Activation::None: break;
        case Activation::Relu:
          if (!(x > 0.0)) g.data[i] = 0.0;
          break;
        case Activation::Pact:
          if (x >= l.alpha) {
            lg.alpha += g.data[i];
            g.data[i] = 0.0;
          } else if (!(x > 0.0)) {
            g.data[i] = 0.0;
          }
          break;
      }
    }
    Matrix gin(rows, l.in);
    if (l.kind == LayerKind::Dense) {
      for (std::size_t b = 0; b < rows; ++b) {
        const auto xr = t.input.row(b);
        auto gr = gin.row(b);
        for (std::size_t o = 0; o < l.out; ++o) {
          const double go = g.at(b, o);
          if (go == 0.0) continue;
          lg.bias[o] += go;
          double* dw = lg.weights.data() + o * l.in;
          const double* wr = t.weights.data() + o * l.in;
          for (std::size_t i = 0; i < l.in; ++i) {
            dw[i] += go * xr[i];
            gr[i] += go * wr[i];
          }
        }
      }
    } else {
      const ConvShape& s = l.conv;
      const std::size_t positions = s.positions();
      const std::size_t patch = s.patch();
      std::vector<double> gcol(positions * patch);
      for (std::size_t b = 0; b < rows; ++b) {
        const std::vector<double> col = detail::im2col(t.input.row(b), s);
        std::fill(gcol.begin(), gcol.end(), 0.0);
        for (int oc = 0; oc < s.out_channels; ++oc) {
          const auto oci = static_cast<std::size_t>(oc);
          double* dw = lg.weights.data() + oci * patch;
          const double* wr = t.weights.data() + oci * patch;
          for (std::size_t p = 0; p < positions; ++p) {
            const double go = g.at(b, oci * positions + p);
            if (go == 0.0) continue;
            lg.bias[oci] += go;
            const double* cr = col.data() + p * patch;
            double* gc = gcol.data() + p * patch;
            for (std::size_t q = 0; q < patch; ++q) {
              dw[q] += go * cr[q];
              gc[q] += go * wr[q];
            }
          }
        }
        detail::col2im_add(gcol, s, gin.row(b));
      }
    }
    if (!t.weight_pass.empty()) {
      for (std::size_t i = 0; i < lg.weights.size(); ++i) {
        if (!t.weight_pass[i]) lg.weights[i] = 0.0;
      }
    }
    if (!t.input_pass.empty()) {
      for (std::size_t i = 0; i < gin.data.size(); ++i) {
        if (!t.input_pass[i]) gin.data[i] = 0.0;
      }
    }
    g = std::move(gin);
  }
  return grads;
}

}  // namespace xrnpe::nn

#include "xrnpe/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xrnpe/error.hpp"
#include "xrnpe/parallel.hpp"
#include "xrnpe/rng.hpp"
#include "nn_detail.hpp"

namespace xrnpe::nn {

namespace {

constexpr std::size_t kChunk = 16;
constexpr double kMinAlpha = 1e-3;

Batch slice(const Batch& batch, std::size_t begin, std::size_t end) {
  Batch out;
  out.x = Matrix(end - begin, batch.x.cols);
  std::copy(batch.x.data.begin() + static_cast<std::ptrdiff_t>(begin * batch.x.cols),
            batch.x.data.begin() + static_cast<std::ptrdiff_t>(end * batch.x.cols), out.x.data.begin());
  if (!batch.labels.empty()) {
    out.labels.assign(batch.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      batch.labels.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batch.targets.rows > 0) {
    out.targets = Matrix(end - begin, batch.targets.cols);
    std::copy(batch.targets.data.begin() + static_cast<std::ptrdiff_t>(begin * batch.targets.cols),
              batch.targets.data.begin() + static_cast<std::ptrdiff_t>(end * batch.targets.cols),
              out.targets.data.begin());
  }
  return out;
}

void sgd_step(Network& net, const Gradients& g, double lr) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Layer& l = net.layers[i];
    const LayerGrad& lg = g.layers[i];
    for (std::size_t j = 0; j < l.weights.size(); ++j) l.weights[j] -= lr * lg.weights[j];
    for (std::size_t j = 0; j < l.bias.size(); ++j) l.bias[j] -= lr * lg.bias[j];
    if (l.activation == Activation::Pact) l.alpha = std::max(kMinAlpha, l.alpha - lr * lg.alpha);
  }
}

double metric(const Network& net, const Batch& batch, const QuantPlan* plan) {
  const ForwardTrace t = forward(net, batch, plan);
  const EvalResult r = score(t.logits, batch);
  return batch.targets.rows > 0 ? r.rmse : r.accuracy;
}

TrainHistory train_loop(Network& net, const Dataset& data, const TrainConfig& cfg, const QuantPlan* plan) {
  net.validate();
  if (data.features.cols != net.input_size()) {
    throw DataError("dataset has " + std::to_string(data.features.cols) + " features, network expects " +
                    std::to_string(net.input_size()));
  }
  if (data.train.empty()) throw DataError("training split is empty");
  if (cfg.epochs < 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("epochs >= 0, batch size >= 1 and learning rate > 0 required");
  }
  std::vector<std::size_t> order = data.train;
  Rng rng(cfg.seed);
  const Batch train_all = data.train_batch();
  TrainHistory history;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const Batch batch = data.batch(std::span<const std::size_t>(order).subspan(start, end - start));
      const BatchGradients bg = batch_gradients(net, batch, plan, cfg.threads);
      if (!std::isfinite(bg.loss)) {
        throw DivergenceError("loss diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(steps) +
                              "; lower the learning rate");
      }
      sgd_step(net, bg.grads, cfg.learning_rate);
      loss_sum += bg.loss;
      ++steps;
    }
    history.push_back({epoch, loss_sum / static_cast<double>(steps), metric(net, train_all, plan)});
  }
  return history;
}

}  // namespace

BatchGradients batch_gradients(const Network& net, const Batch& batch, const QuantPlan* plan, int threads) {
  const std::size_t rows = batch.size();
  if (rows == 0) throw DataError("empty batch");
  const std::size_t chunks = (rows + kChunk - 1) / kChunk;
  std::vector<Gradients> parts(chunks);
  std::vector<double> losses(chunks, 0.0);
  parallel_for(chunks, threads, [&](std::size_t, std::size_t c) {
    const Batch sub = slice(batch, c * kChunk, std::min(rows, (c + 1) * kChunk));
    const ForwardTrace t = forward(net, sub, plan, rows);
    losses[c] = t.loss;
    parts[c] = backward(net, sub, t, rows);
  });
  BatchGradients out{zero_gradients(net), 0.0};
  for (std::size_t c = 0; c < chunks; ++c) {
    out.grads += parts[c];
    out.loss += losses[c];
  }
  return out;
}

QuantPlan calibrate(const Network& net, const Matrix& calibration, const PrecisionMap& map) {
  if (calibration.cols != net.input_size()) throw DataError("calibration data does not match the network input");
  QuantPlan plan;
  Matrix cur = calibration;
  for (const Layer& l : net.layers) {
    const LayerAssignment& a = map.at(l.id);
    LayerQuant q{a.weights, a.activations, power_of_two_scale(cur.data, a.weights), 1.0};
    Matrix pre;
    detail::layer_pre(l, cur, l.weights, pre);
    for (double& v : pre.data) v = detail::activate(l.activation, v, l.alpha);
    q.output_scale = power_of_two_scale(pre.data, a.activations);
    plan.layers.push_back(q);
    cur = std::move(pre);
  }
  return plan;
}

QuantizedForward forward_quantized(const Network& net, const Matrix& x, const PrecisionMap& map,
                                   const QuantPlan& plan, const ArrayConfig& cfg) {
  net.validate();
  if (x.cols != net.input_size()) {
    throw DataError("input has " + std::to_string(x.cols) + " features, network expects " +
                    std::to_string(net.input_size()));
  }
  if (plan.layers.size() != net.layers.size()) throw DataError("quant plan does not match network");
  QuantizedForward result;
  Matrix cur = x;
  const std::size_t batch = x.rows;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& l = net.layers[li];
    const FormatSpec fmt = map.at(l.id).weights;
    const LayerQuant& q = plan.layers[li];
    Matrix pre;
    RunStats stats;
    if (fmt.is_real()) {
      detail::layer_pre(l, cur, l.weights, pre);
    } else {
      const LatticeRounder& r = detail::rounder_for(fmt);
      const DType dtype = dtype_of(fmt);
      const std::size_t k = l.weight_cols();
      const std::size_t n = l.weight_rows();
      const bool conv = l.kind == LayerKind::Conv2d;
      const std::size_t positions = conv ? l.conv.positions() : 1;
      const std::size_t m = batch * positions;

      Tensor a = Tensor::zeros(dtype, {static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(k)});
      const double sx = q.input_scale;
      for (std::size_t b = 0; b < batch; ++b) {
        if (conv) {
          const std::vector<double> col = detail::im2col(cur.row(b), l.conv);
          for (std::size_t i = 0; i < col.size(); ++i) a.data[b * col.size() + i] = r.round(col[i] / sx);
        } else {
          for (std::size_t i = 0; i < k; ++i) a.data[b * k + i] = r.round(cur.at(b, i) / sx);
        }
      }
      const double sw = power_of_two_scale(l.weights, fmt);
      Tensor w = Tensor::zeros(dtype, {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(n)});
      for (std::size_t o = 0; o < n; ++o) {
        for (std::size_t i = 0; i < k; ++i) w.data[i * n + o] = r.round(l.weights[o * k + i] / sw);
      }

      ArrayConfig lc = cfg;
      lc.sel = PrecSel::for_format(fmt);
      lc.output = cfg.output.value_or(kPosit16_1);
      const GemmResult g = gemm(a, w, lc);
      stats = g.stats;

      const LatticeRounder& out_r = detail::rounder_for(*lc.output);
      pre = Matrix(batch, l.out);
      const double s = sx * sw;
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t p = 0; p < positions; ++p) {
          for (std::size_t o = 0; o < n; ++o) {
            const double v = out_r.value(static_cast<std::uint32_t>(g.c.data[(b * positions + p) * n + o]));
            pre.at(b, o * positions + p) = v * s + l.bias[o];
          }
        }
      }
    }
    for (double& v : pre.data) v = detail::activate(l.activation, v, l.alpha);
    if (li + 1 < net.layers.size()) detail::fake_quantize(pre.data, q.activations, q.output_scale);
    result.per_layer.push_back(stats);
    result.stats += stats;
    cur = std::move(pre);
  }
  result.outputs = std::move(cur);
  return result;
}

QuantizedForward forward_quantized(const Network& net, const Matrix& x, const PrecisionMap& map,
                                   const ArrayConfig& cfg) {
  return forward_quantized(net, x, map, calibrate(net, x, map), cfg);
}

TrainHistory train_reference(Network& net, const Dataset& data, const TrainConfig& cfg) {
  return train_loop(net, data, cfg, nullptr);
}

TrainHistory qat_train(Network& net, const Dataset& data, const PrecisionMap& map, const TrainConfig& cfg) {
  net.validate();
  const QuantPlan plan = calibrate(net, data.train_batch().x, map);
  return train_loop(net, data, cfg, &plan);
}

EvalResult score(const Matrix& logits, const Batch& batch) {
  EvalResult r;
  r.samples = logits.rows;
  if (logits.rows == 0) return r;
  if (batch.targets.rows > 0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < logits.data.size(); ++i) {
      const double d = logits.data[i] - batch.targets.data[i];
      sq += d * d;
    }
    r.rmse = std::sqrt(sq / static_cast<double>(logits.data.size()));
    return r;
  }
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const auto z = logits.row(b);
    const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    if (best == batch.labels[b]) ++r.correct;
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.samples);
  return r;
}

EvalResult evaluate_rows(const Network& net, const Dataset& data, std::span<const std::size_t> rows,
                         const PrecisionMap* map, const ArrayConfig& cfg) {
  net.validate();
  const Batch batch = data.batch(rows);
  if (rows.empty()) return {};
  if (!map) {
    if (batch.x.cols != net.input_size()) throw DataError("dataset features do not match the network input");
    return score(predict(net, batch.x), batch);
  }
  const QuantPlan plan = calibrate(net, data.train.empty() ? batch.x : data.train_batch().x, *map);
  const QuantizedForward qf = forward_quantized(net, batch.x, *map, plan, cfg);
  EvalResult r = score(qf.outputs, batch);
  r.quantized = true;
  r.stats = qf.stats;
  return r;
}

EvalResult evaluate(const Network& net, const Dataset& data, const PrecisionMap* map, const ArrayConfig& cfg) {
  return evaluate_rows(net, data, data.test.empty() ? data.train : data.test, map, cfg);
}

}  // namespace xrnpe::nn

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "xrnpe/checkpoint.hpp"
#include "xrnpe/codec.hpp"
#include "xrnpe/dataset.hpp"
#include "xrnpe/error.hpp"
#include "xrnpe/rng.hpp"
#include "xrnpe/training.hpp"

using namespace xrnpe;
using namespace xrnpe::nn;

namespace {

Network mlp(std::vector<std::size_t> widths, Activation hidden, LossKind loss, std::uint64_t seed) {
  Network net;
  net.loss = loss;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    net.layers.push_back(Layer::dense("fc" + std::to_string(i + 1), widths[i], widths[i + 1],
                                      last ? Activation::None : hidden));
  }
  init_weights(net, seed);
  return net;
}

Network small_cnn(std::uint64_t seed) {
  Network net;
  ConvShape s;
  s.in_channels = 2;
  s.in_height = 5;
  s.in_width = 5;
  s.out_channels = 3;
  s.kernel = 3;
  s.stride = 1;
  net.layers.push_back(Layer::conv2d("conv1", s, Activation::Relu));
  ConvShape s2;
  s2.in_channels = 3;
  s2.in_height = 3;
  s2.in_width = 3;
  s2.out_channels = 2;
  s2.kernel = 2;
  s2.stride = 1;
  net.layers.push_back(Layer::conv2d("conv2", s2, Activation::Pact));
  net.layers.back().alpha = 0.8;
  net.layers.push_back(Layer::dense("fc", 8, 3, Activation::None));
  init_weights(net, seed);
  for (Layer& l : net.layers) {
    for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.05 * static_cast<double>(i + 1);
  }
  return net;
}

Batch random_batch(std::size_t rows, std::size_t cols, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.x = Matrix(rows, cols);
  for (double& v : b.x.data) v = rng.normal();
  for (std::size_t i = 0; i < rows; ++i) b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
  return b;
}

struct GradCheck {
  double max_rel = 0.0;
  double near_kink = 1e300;
};

double kink_distance(const Network& net, const Batch& batch) {
  const ForwardTrace t = forward(net, batch);
  double d = 1e300;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    if (l.activation == Activation::None) continue;
    for (double v : t.layers[i].pre.data) {
      d = std::min(d, std::fabs(v));
      if (l.activation == Activation::Pact) d = std::min(d, std::fabs(v - l.alpha));
    }
  }
  return d;
}

GradCheck gradient_check(Network net, const Batch& batch) {
  constexpr double h = 1e-6;
  const ForwardTrace t = forward(net, batch);
  const Gradients g = backward(net, batch, t);
  GradCheck out;
  out.near_kink = kink_distance(net, batch);
  const auto rel = [](double a, double n) { return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-4}); };
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    Layer& l = net.layers[li];
    const auto probe = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = forward(net, batch).loss;
      param = saved - h;
      const double down = forward(net, batch).loss;
      param = saved;
      out.max_rel = std::max(out.max_rel, rel(analytic, (up - down) / (2 * h)));
    };
    for (std::size_t i = 0; i < l.weights.size(); ++i) probe(l.weights[i], g.layers[li].weights[i]);
    for (std::size_t i = 0; i < l.bias.size(); ++i) probe(l.bias[i], g.layers[li].bias[i]);
    if (l.activation == Activation::Pact) probe(l.alpha, g.layers[li].alpha);
  }
  return out;
}

}  // namespace

TEST(Network, IdentityLayerPassesInputThrough) {
  Network net;
  net.loss = LossKind::Mse;
  net.layers.push_back(Layer::dense("id", 3, 3, Activation::None));
  for (std::size_t i = 0; i < 3; ++i) net.layers[0].weights[i * 3 + i] = 1.0;
  Batch b = random_batch(5, 3, 3, 1);
  b.targets = b.x;
  const ForwardTrace t = forward_reference(net, b);
  EXPECT_EQ(t.logits.data, b.x.data);
  EXPECT_EQ(t.loss, 0.0);
}

TEST(Network, ZeroWeightsGiveUniformSoftmax) {
  Network net = mlp({6, 5, 4}, Activation::Relu, LossKind::CrossEntropy, 1);
  for (Layer& l : net.layers) std::fill(l.weights.begin(), l.weights.end(), 0.0);
  const Batch b = random_batch(7, 6, 4, 2);
  EXPECT_NEAR(forward_reference(net, b).loss, std::log(4.0), 1e-15);
}

TEST(Network, ShapeMismatchIsDataError) {
  Network net = mlp({4, 3, 2}, Activation::Relu, LossKind::CrossEntropy, 1);
  const Batch b = random_batch(2, 5, 2, 1);
  EXPECT_THROW(forward_reference(net, b), DataError);
  net.layers[1].in = 4;
  EXPECT_THROW(net.validate(), DataError);
}

TEST(Network, PactAlphaMustBePositive) {
  Network net = mlp({2, 2, 2}, Activation::Pact, LossKind::CrossEntropy, 1);
  net.layers[0].alpha = 0.0;
  EXPECT_THROW(net.validate(), DataError);
}

TEST(Backward, FiniteDifferenceMlp) {
  for (Activation act : {Activation::Relu, Activation::Pact}) {
    Network net = mlp({2, 8, 2}, act, LossKind::CrossEntropy, 21);
    net.layers[0].alpha = 0.9;
    const Batch b = random_batch(16, 2, 2, 22);
    const GradCheck r = gradient_check(net, b);
    ASSERT_GT(r.near_kink, 1e-5);
    EXPECT_LT(r.max_rel, 1e-5);
  }
}

TEST(Backward, FiniteDifferenceMse) {
  Network net = mlp({3, 6, 2}, Activation::Relu, LossKind::Mse, 4);
  Batch b = random_batch(10, 3, 2, 5);
  b.targets = Matrix(10, 2);
  for (std::size_t i = 0; i < 20; ++i) b.targets.data[i] = std::sin(static_cast<double>(i));
  const GradCheck r = gradient_check(net, b);
  ASSERT_GT(r.near_kink, 1e-5);
  EXPECT_LT(r.max_rel, 1e-5);
}

TEST(Backward, FiniteDifferenceConv) {
  const Network net = small_cnn(31);
  const Batch b = random_batch(6, 50, 3, 32);
  const GradCheck r = gradient_check(net, b);
  ASSERT_GT(r.near_kink, 1e-5);
  EXPECT_LT(r.max_rel, 1e-5);
}

TEST(Backward, DeadReluHasZeroFanInGradient) {
  Network net = mlp({3, 4, 2}, Activation::Relu, LossKind::CrossEntropy, 8);
  net.layers[0].bias[2] = -100.0;
  const Batch b = random_batch(12, 3, 2, 9);
  const Gradients g = backward(net, b, forward(net, b));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g.layers[0].weights[2 * 3 + i], 0.0);
  EXPECT_EQ(g.layers[0].bias[2], 0.0);
}

TEST(Backward, PactAlphaGradientWhenSaturated) {
  Network net;
  net.loss = LossKind::Mse;
  net.layers.push_back(Layer::dense("p", 1, 1, Activation::Pact));
  net.layers[0].weights = {1.0};
  net.layers[0].alpha = 1.0;
  constexpr std::size_t n = 8;
  constexpr double upstream = 0.25;
  Batch b;
  b.x = Matrix(n, 1);
  b.targets = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    b.x.data[i] = 2.0 + static_cast<double>(i);
    // dL/dy = (y - t) / n with y = alpha
    b.targets.data[i] = 1.0 - upstream * static_cast<double>(n);
  }
  const Gradients g = backward(net, b, forward(net, b));
  EXPECT_DOUBLE_EQ(g.layers[0].alpha, static_cast<double>(n) * upstream);
  EXPECT_EQ(g.layers[0].weights[0], 0.0);
}

TEST(Training, XorReachesPerfectAccuracy) {
  Dataset xor_set;
  xor_set.features = Matrix(4, 2);
  xor_set.features.data = {0, 0, 0, 1, 1, 0, 1, 1};
  xor_set.targets = Matrix(4, 1);
  xor_set.targets.data = {0, 1, 1, 0};
  xor_set.train = {0, 1, 2, 3};
  Network net = mlp({2, 4, 1}, Activation::Relu, LossKind::Mse, 3);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 4;
  cfg.epochs = 100;
  int correct = 0;
  for (int round = 0; round < 50 && correct < 4; ++round) {
    train_reference(net, xor_set, cfg);
    const Matrix y = predict(net, xor_set.features);
    correct = 0;
    for (std::size_t i = 0; i < 4; ++i) correct += (y.data[i] > 0.5) == (xor_set.targets.data[i] > 0.5);
  }
  EXPECT_EQ(correct, 4);
}

TEST(Training, DeterministicAcrossThreadCounts) {
  const Dataset data = make_gaussian_clusters(4, 16, 60, 0.4, 5);
  Network a = mlp({16, 24, 4}, Activation::Pact, LossKind::CrossEntropy, 6);
  Network b = a;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 64;
  cfg.threads = 1;
  const TrainHistory ha = train_reference(a, data, cfg);
  cfg.threads = 4;
  const TrainHistory hb = train_reference(b, data, cfg);
  ASSERT_EQ(ha.size(), hb.size());
  for (std::size_t i = 0; i < ha.size(); ++i) EXPECT_EQ(ha[i].loss, hb[i].loss);
  for (std::size_t l = 0; l < a.layers.size(); ++l) EXPECT_EQ(a.layers[l].weights, b.layers[l].weights);
}

TEST(Training, DivergenceIsReported) {
  const Dataset data = make_gaussian_clusters(2, 4, 20, 0.2, 1);
  Network net = mlp({4, 8, 2}, Activation::Relu, LossKind::CrossEntropy, 2);
  net.layers[1].bias[0] = std::nan("");
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train_reference(net, data, cfg), DivergenceError);
}

TEST(Evaluate, SeparableSetReachesFullAccuracy) {
  const Dataset data = make_gaussian_clusters(3, 4, 80, 0.05, 17);
  Network net = mlp({4, 12, 3}, Activation::Relu, LossKind::CrossEntropy, 18);
  TrainConfig cfg;
  cfg.epochs = 60;
  train_reference(net, data, cfg);
  EXPECT_EQ(evaluate(net, data).accuracy, 1.0);
}

TEST(Evaluate, UntrainedNetsAreAtChance) {
  double sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Dataset data = make_gaussian_clusters(2, 8, 100, 0.5, 1000 + seed);
    const Network net = mlp({8, 16, 2}, Activation::Relu, LossKind::CrossEntropy, seed);
    sum += evaluate(net, data).accuracy;
  }
  EXPECT_NEAR(sum / 30.0, 0.5, 0.1);
}

TEST(Evaluate, RegressionIdentityHasZeroRmse) {
  Dataset data;
  data.features = Matrix(10, 1);
  data.targets = Matrix(10, 1);
  for (std::size_t i = 0; i < 10; ++i) data.features.data[i] = data.targets.data[i] = 0.3 * static_cast<double>(i);
  split(data, 0.3, 1);
  Network net;
  net.loss = LossKind::Mse;
  net.layers.push_back(Layer::dense("y", 1, 1, Activation::None));
  net.layers[0].weights = {1.0};
  EXPECT_EQ(evaluate(net, data).rmse, 0.0);
}

TEST(Quantized, Posit16MatchesReferenceArgmax) {
  const Dataset data = make_gaussian_clusters(4, 16, 50, 0.4, 3);
  Network net = mlp({16, 20, 4}, Activation::Relu, LossKind::CrossEntropy, 4);
  for (Layer& l : net.layers) {
    for (double& w : l.weights) w *= 0.25;
  }
  const Batch b = data.test_batch();
  const PrecisionMap map = PrecisionMap::uniform(net.ids(), kPosit16_1);
  const QuantizedForward q = forward_quantized(net, b.x, map, ArrayConfig{});
  const Matrix ref = predict(net, b.x);
  for (std::size_t r = 0; r < ref.rows; ++r) {
    const auto zr = ref.row(r);
    const auto zq = q.outputs.row(r);
    EXPECT_EQ(std::max_element(zr.begin(), zr.end()) - zr.begin(), std::max_element(zq.begin(), zq.end()) - zq.begin());
  }
  EXPECT_EQ(q.per_layer.size(), 2u);
  EXPECT_EQ(q.per_layer[0].mac_ops, b.size() * 16 * 20);
}

TEST(Quantized, SingleTerminalRoundingBound) {
  // Inputs and weights exactly representable: the only error is the final
  // rounding of each fused dot.
  Rng rng(9);
  Network net;
  net.loss = LossKind::Mse;
  net.layers.push_back(Layer::dense("fc", 24, 6, Activation::None));
  const LatticeRounder r(kPosit16_1);
  for (double& w : net.layers[0].weights) w = r.value(r.round(rng.normal()));
  Matrix x(10, 24);
  for (double& v : x.data) v = r.value(r.round(rng.normal()));
  const PrecisionMap map = PrecisionMap::uniform(net.ids(), kPosit16_1);
  const QuantizedForward q = forward_quantized(net, x, map, ArrayConfig{});
  const Matrix ref = predict(net, x);
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const double v = ref.data[i];
    const int scale = v == 0.0 ? -28 : std::ilogb(v);
    EXPECT_LE(std::fabs(q.outputs.data[i] - v), 24.0 * std::ldexp(1.0, scale - 12)) << i;
  }
}

TEST(Quantized, ZeroInputGatesFirstLayer) {
  Network net = mlp({8, 6, 3}, Activation::Relu, LossKind::CrossEntropy, 2);
  const Matrix x(5, 8);
  const PrecisionMap map = PrecisionMap::uniform(net.ids(), kPosit8_0);
  const QuantizedForward q = forward_quantized(net, x, map, ArrayConfig{});
  EXPECT_EQ(q.per_layer[0].operand_gated, q.per_layer[0].mac_ops);
  EXPECT_GT(q.per_layer[0].mac_ops, 0u);
}

TEST(Quantized, MixedMapMatchesSimdDots) {
  Network net = mlp({6, 5, 3}, Activation::Relu, LossKind::CrossEntropy, 12);
  PrecisionMap map;
  map.layers = {{"fc1", kFp4, kFp4}, {"fc2", kPosit8_0, kPosit8_0}};
  const Batch b = random_batch(4, 6, 3, 13);
  const QuantPlan plan = calibrate(net, b.x, map);
  const QuantizedForward q = forward_quantized(net, b.x, map, plan, ArrayConfig{});
  ASSERT_EQ(q.per_layer.size(), 2u);
  EXPECT_EQ(q.per_layer[0].mac_ops, 4u * 6 * 5);
  EXPECT_EQ(q.per_layer[1].mac_ops, 4u * 5 * 3);

  // Both layers recomputed with one SIMD dot per output.
  const LatticeRounder p16(kPosit16_1);
  Matrix cur = b.x;
  for (std::size_t li = 0; li < 2; ++li) {
    const Layer& l = net.layers[li];
    const FormatSpec fmt = map.layers[li].weights;
    const LatticeRounder r(fmt);
    const double sx = plan.layers[li].input_scale;
    const double sw = power_of_two_scale(l.weights, fmt);
    Matrix next(cur.rows, l.out);
    for (std::size_t s = 0; s < cur.rows; ++s) {
      for (std::size_t o = 0; o < l.out; ++o) {
        std::vector<std::uint16_t> xa;
        std::vector<std::uint16_t> wb;
        for (std::size_t i = 0; i < l.in; ++i) {
          xa.push_back(static_cast<std::uint16_t>(r.round(cur.at(s, i) / sx)));
          wb.push_back(static_cast<std::uint16_t>(r.round(l.weights[o * l.in + i] / sw)));
        }
        SimdMac mac(PrecSel::for_format(fmt), kPosit16_1);
        const std::uint32_t bits = mac.dot(xa, wb, RoundingMode::PerDot, 1).lanes[0];
        double v = p16.value(bits) * sx * sw + l.bias[o];
        if (li == 0) {
          v = std::max(v, 0.0);
          const double so = plan.layers[0].output_scale;
          v = so * r.value(r.round(v / so));
        }
        next.at(s, o) = v;
      }
    }
    cur = std::move(next);
  }
  EXPECT_EQ(q.outputs.data, cur.data);
}

TEST(Quantized, MissingLayerIsDataError) {
  Network net = mlp({4, 3, 2}, Activation::Relu, LossKind::CrossEntropy, 1);
  PrecisionMap map;
  map.layers = {{"fc1", kFp4, kFp4}};
  EXPECT_THROW(forward_quantized(net, Matrix(2, 4), map, ArrayConfig{}), DataError);
}

TEST(Qat, FullPrecisionMapReproducesReferenceTraining) {
  const Dataset data = make_gaussian_clusters(3, 6, 40, 0.4, 8);
  Network a = mlp({6, 10, 3}, Activation::Pact, LossKind::CrossEntropy, 9);
  Network b = a;
  TrainConfig cfg;
  cfg.epochs = 5;
  const TrainHistory ref = train_reference(a, data, cfg);
  const TrainHistory qat = qat_train(b, data, PrecisionMap::uniform(b.ids(), kReal64), cfg);
  ASSERT_EQ(ref.size(), qat.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_NEAR(ref[i].loss, qat[i].loss, 1e-10);
    EXPECT_NEAR(ref[i].accuracy, qat[i].accuracy, 1e-10);
  }
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t i = 0; i < a.layers[l].weights.size(); ++i) {
      EXPECT_NEAR(a.layers[l].weights[i], b.layers[l].weights[i], 1e-10);
    }
  }
}

TEST(Qat, PactAlphaStaysPositiveAndFinite) {
  const Dataset data = make_gaussian_clusters(2, 8, 80, 0.4, 10);
  Network net = mlp({8, 12, 2}, Activation::Pact, LossKind::CrossEntropy, 11);
  net.layers[0].alpha = 2.0;
  TrainConfig cfg;
  cfg.epochs = 10;
  qat_train(net, data, PrecisionMap::uniform(net.ids(), kFp4), cfg);
  EXPECT_GT(net.layers[0].alpha, 0.0);
  EXPECT_TRUE(std::isfinite(net.layers[0].alpha));
  EXPECT_NE(net.layers[0].alpha, 2.0);
}

TEST(Dataset, GaussianClustersAreBalancedAndSplit) {
  const Dataset d = make_gaussian_clusters(4, 3, 25, 0.1, 1);
  EXPECT_EQ(d.size(), 100u);
  EXPECT_EQ(d.num_classes, 4);
  EXPECT_EQ(d.train.size() + d.test.size(), 100u);
  EXPECT_EQ(d.test.size(), 25u);
  std::vector<int> counts(4, 0);
  for (int l : d.labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) EXPECT_EQ(c, 25);
  const Dataset again = make_gaussian_clusters(4, 3, 25, 0.1, 1);
  EXPECT_EQ(again.features.data, d.features.data);
  EXPECT_EQ(again.test, d.test);
}

TEST(Dataset, CsvRoundTripAndErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "xrnpe_nn_csv";
  std::filesystem::create_directories(dir);
  const Dataset d = make_gaussian_clusters(3, 4, 10, 0.2, 2);
  save_csv(dir / "d.csv", d);
  const Dataset back = load_csv(dir / "d.csv", 0.25, 2);
  EXPECT_EQ(back.features.data, d.features.data);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.num_classes, 3);

  const auto write = [&](const std::string& text) {
    std::ofstream(dir / "bad.csv") << text;
    return dir / "bad.csv";
  };
  EXPECT_THROW(load_csv(write("a,b\n1,2\n")), DataError);
  EXPECT_THROW(load_csv(write("a,label\n1,0\n2\n")), DataError);
  EXPECT_THROW(load_csv(write("a,label\nx,0\n2,1\n")), DataError);
  EXPECT_THROW(load_csv(write("a,label\n1,0.5\n2,1\n")), DataError);
  EXPECT_THROW(load_csv(dir / "missing.csv"), DataError);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, RoundTripWithGradients) {
  const auto dir = std::filesystem::temp_directory_path() / "xrnpe_ckpt";
  std::filesystem::create_directories(dir);
  Network net = small_cnn(5);
  std::vector<std::vector<double>> grads;
  for (const Layer& l : net.layers) grads.emplace_back(l.weights.size(), 0.125);
  save_checkpoint(dir / "m.json", net, grads);
  const Checkpoint ck = load_checkpoint(dir / "m.json");
  ASSERT_EQ(ck.net.layers.size(), 3u);
  EXPECT_TRUE(ck.has_grads());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ck.net.layers[i].weights, net.layers[i].weights);
    EXPECT_EQ(ck.net.layers[i].bias, net.layers[i].bias);
    EXPECT_EQ(ck.net.layers[i].alpha, net.layers[i].alpha);
    EXPECT_EQ(ck.grads[i], grads[i]);
  }
  EXPECT_EQ(ck.net.layers[0].conv.out_channels, 3);

  save_size_model(dir / "s.json", std::vector<LayerSize>{{"a", 10}, {"b", 20}});
  const Checkpoint s = load_checkpoint(dir / "s.json");
  EXPECT_TRUE(s.size_only);
  EXPECT_EQ(s.sizes[1].params, 20u);
  EXPECT_THROW(s.layer_tensors(), DataError);

  write_text(dir / "bad.json", "{\"format\": \"other\"}");
  EXPECT_THROW(load_checkpoint(dir / "bad.json"), DataError);
  write_text(dir / "bad.json", "{not json");
  EXPECT_THROW(load_checkpoint(dir / "bad.json"), DataError);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, PrecisionMapAndSensitivityJson) {
  PrecisionMap map;
  map.layers = {{"a", kFp4, kPosit8_0}, {"b", kPosit16_1, kPosit16_1}};
  const PrecisionMap back = parse_precision_map(precision_map_json(map));
  ASSERT_EQ(back.layers.size(), 2u);
  EXPECT_EQ(back.at("a").weights, kFp4);
  EXPECT_EQ(back.at("a").activations, kPosit8_0);
  EXPECT_THROW(parse_precision_map("{\"layers\": [{\"id\": \"a\", \"weights\": \"bf16\"}]}"), DataError);

  SensitivityReport r;
  r.layers = {{"a", -0.1, 1.0 / 3.0, 1.0 / 3.0}, {"b", 0.0, -2.5e-7, 0.0}};
  r.ranking = {"b", "a"};
  const SensitivityReport rb = parse_sensitivity(sensitivity_json(r));
  EXPECT_EQ(rb.layers[0].s4, 1.0 / 3.0);
  EXPECT_EQ(rb.layers[1].s4, -2.5e-7);
  EXPECT_EQ(rb.ranking, r.ranking);
}

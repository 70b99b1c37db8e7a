// make-model, quantize, sens, assign, size.
#include <cmath>
#include <sstream>

#include "common.hpp"
#include "xrnpe/checkpoint.hpp"
#include "xrnpe/error.hpp"
#include "xrnpe/training.hpp"

namespace xrnpe::cli {

namespace {

Checkpoint load_model(RunManifest& m, const std::string& path) {
  m.input(path);
  return load_checkpoint(path);
}

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> widths;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, '-')) {
    std::size_t used = 0;
    const unsigned long v = part.empty() ? 0 : std::stoul(part, &used);
    if (part.empty() || used != part.size() || v == 0) throw std::invalid_argument("bad --layers entry '" + part + "'");
    widths.push_back(v);
  }
  if (widths.size() < 2) throw std::invalid_argument("--layers needs at least an input and an output width");
  return widths;
}

std::vector<std::string> ids_of(std::span<const LayerSize> sizes) {
  std::vector<std::string> ids;
  for (const LayerSize& s : sizes) ids.push_back(s.id);
  return ids;
}

QuantScheme scheme_arg(const std::string& name) {
  if (name == "uniform") return QuantScheme::UniformCode;
  if (name == "lattice") return QuantScheme::FormatLattice;
  throw std::invalid_argument("--scheme must be uniform or lattice");
}

ThresholdRule rule_arg(const std::string& name) {
  if (name == "percentile") return ThresholdRule::Percentile;
  if (name == "symmetric") return ThresholdRule::Symmetric;
  throw std::invalid_argument("--thresholds must be percentile or symmetric");
}

FormatSpec four_bit_arg(const std::string& name) {
  const FormatSpec f = format_arg(name);
  if (f != kFp4 && f != kPosit4_1) throw std::invalid_argument("--four-bit must be fp4 or posit4_1");
  return f;
}

void add_make_model(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    std::string layers;
    std::string activation = "relu";
    double alpha = 6.0;
    std::string loss = "cross_entropy";
    std::uint64_t params = 0;
    int count = 1;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("make-model", "Write a freshly initialized checkpoint");
  sub->add_option("--layers", o->layers, "dense widths, e.g. 8-16-2");
  sub->add_option("--activation", o->activation, "hidden activation")->check(CLI::IsMember({"relu", "pact", "none"}));
  sub->add_option("--alpha", o->alpha, "initial PACT clip level")->check(CLI::PositiveNumber);
  sub->add_option("--loss", o->loss, "loss")->check(CLI::IsMember({"cross_entropy", "ce", "mse"}));
  sub->add_option("--params", o->params, "size-only model with this many parameters (instead of --layers)");
  sub->add_option("--count", o->count, "size-only model: number of layers")->check(CLI::Range(1, 1 << 20));
  sub->add_option("--out", o->out, "manifest path")->required();
  reg.push_back({sub, [o, &g](RunManifest& m) {
    m.seed(g.seed);
    if (o->params > 0) {
      if (!o->layers.empty()) throw std::invalid_argument("--params and --layers are exclusive");
      const auto count = static_cast<std::uint64_t>(o->count);
      std::vector<LayerSize> sizes;
      for (std::uint64_t i = 0; i < count; ++i) {
        // Remainder goes to the first layers, one parameter each.
        const std::uint64_t n = o->params / count + (i < o->params % count ? 1 : 0);
        sizes.push_back({"layer" + std::to_string(i + 1), n});
      }
      m.param("params", o->params);
      m.param("count", o->count);
      save_size_model(o->out, sizes);
      m.output(o->out);
      return;
    }
    if (o->layers.empty()) throw std::invalid_argument("give --layers or --params");
    const std::vector<std::size_t> widths = parse_widths(o->layers);
    nn::Network net;
    net.loss = nn::parse_loss(o->loss);
    const nn::Activation act = nn::parse_activation(o->activation);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      const bool last = i + 2 == widths.size();
      nn::Layer l = nn::Layer::dense("fc" + std::to_string(i + 1), widths[i], widths[i + 1],
                                     last ? nn::Activation::None : act);
      l.alpha = o->alpha;
      net.layers.push_back(std::move(l));
    }
    nn::init_weights(net, g.seed);
    m.param("layers", o->layers);
    save_checkpoint(o->out, net);
    m.output(o->out);
  }});
}

void add_quantize(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string model;
    int bits = 8;
    std::string thresholds = "percentile";
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("quantize", "Uniform integer-code quantization report per layer");
  sub->add_option("--model", o->model, "checkpoint manifest")->required();
  sub->add_option("--bits", o->bits, "code width")->check(CLI::Range(2, 16));
  sub->add_option("--thresholds", o->thresholds, "percentile (0.1/99.9) or symmetric ([-1, 1])");
  sub->add_option("--out", o->out, "JSON report (stdout when omitted)");
  reg.push_back({sub, [o](RunManifest& m) {
    const Checkpoint ck = load_model(m, o->model);
    const ThresholdRule rule = rule_arg(o->thresholds);
    m.param("bits", o->bits);
    m.param("thresholds", o->thresholds);
    json layers = json::array();
    for (const LayerTensor& l : ck.layer_tensors()) {
      const QuantConfig cfg = make_quant_config(l.weights, o->bits, rule);
      const std::vector<std::uint32_t> codes = quantize(l.weights, cfg);
      const std::vector<double> q = fake_quantize(l.weights, cfg);
      double sq = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) sq += (q[i] - l.weights[i]) * (q[i] - l.weights[i]);
      json lj;
      lj["id"] = l.id;
      lj["params"] = l.param_count();
      lj["degenerate"] = cfg.degenerate;
      lj["k"] = number_json(cfg.k);
      lj["w_low"] = number_json(cfg.w_low);
      lj["w_high"] = number_json(cfg.w_high);
      lj["step"] = number_json(cfg.step());
      lj["code_entropy_bits"] = number_json(code_entropy(codes, o->bits));
      lj["error_l2"] = number_json(std::sqrt(sq));
      layers.push_back(std::move(lj));
    }
    json j;
    j["bits"] = o->bits;
    j["thresholds"] = o->thresholds;
    j["layers"] = std::move(layers);
    emit(m, o->out, dump(j));
  }});
}

void add_sens(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    std::string model;
    std::string map = "all_posit16";
    std::string scheme = "uniform";
    std::string thresholds = "percentile";
    std::string four_bit = "fp4";
    bool compute_grads = false;
    std::string save_grads;
    DataOptions data;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("sens", "Per-layer sensitivity report and ranking");
  sub->add_option("--model", o->model, "checkpoint manifest")->required();
  sub->add_option("--map", o->map, "current precision map");
  sub->add_option("--scheme", o->scheme, "uniform (integer codes) or lattice (format values)");
  sub->add_option("--thresholds", o->thresholds, "percentile or symmetric (uniform scheme)");
  sub->add_option("--four-bit", o->four_bit, "4-bit candidate: fp4 or posit4_1");
  sub->add_flag("--compute-grads", o->compute_grads, "compute loss gradients on the training split first");
  sub->add_option("--save-grads", o->save_grads, "write the checkpoint with gradients here");
  o->data.add_to(sub);
  sub->add_option("--out", o->out, "JSON report (stdout when omitted)");
  reg.push_back({sub, [o, &g](RunManifest& m) {
    Checkpoint ck = load_model(m, o->model);
    SensitivityOptions opts;
    opts.scheme = scheme_arg(o->scheme);
    opts.thresholds = rule_arg(o->thresholds);
    opts.four_bit = four_bit_arg(o->four_bit);
    m.param("scheme", o->scheme);
    m.format("four_bit", opts.four_bit.name());
    if (o->compute_grads) {
      if (ck.size_only) throw DataError("a size-only model has no weights to differentiate");
      m.seed(g.seed);
      const nn::Dataset data = o->data.load(m, g.seed);
      if (data.features.cols != ck.net.input_size()) throw DataError("dataset features do not match the model input");
      const nn::BatchGradients bg = nn::batch_gradients(ck.net, data.train_batch(), nullptr, g.threads);
      ck.grads.clear();
      for (const nn::LayerGrad& lg : bg.grads.layers) ck.grads.push_back(lg.weights);
      m.param("loss", number_json(bg.loss));
      if (!o->save_grads.empty()) {
        save_checkpoint(o->save_grads, ck.net, ck.grads);
        m.output(o->save_grads);
      }
    }
    const std::vector<LayerTensor> layers = ck.layer_tensors();
    for (const LayerTensor& l : layers) {
      if (l.grad.empty()) {
        throw DataError("layer '" + l.id + "' has no gradient in the checkpoint; rerun with --compute-grads "
                        "(and --data or synthetic data options)");
      }
    }
    const PrecisionMap current = map_arg(o->map, ids_of(layer_sizes(layers)), m);
    emit(m, o->out, sensitivity_json(sensitivity_report(layers, current, opts)));
  }});
}

void add_assign(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string model;
    std::string sens;
    double budget = 16.0;
    std::string four_bit = "fp4";
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("assign", "Greedy per-layer precision under an average-bit budget");
  sub->add_option("--model", o->model, "checkpoint manifest (layer sizes)")->required();
  sub->add_option("--sens", o->sens, "sensitivity report (not needed for --budget >= 16)");
  sub->add_option("--budget", o->budget, "parameter-weighted average bits")->required();
  sub->add_option("--four-bit", o->four_bit, "4-bit format: fp4 or posit4_1");
  sub->add_option("--out", o->out, "precision map JSON (stdout when omitted)");
  reg.push_back({sub, [o](RunManifest& m) {
    const Checkpoint ck = load_model(m, o->model);
    const FormatSpec four = four_bit_arg(o->four_bit);
    m.param("budget", o->budget);
    m.format("four_bit", four.name());
    SensitivityReport report;
    if (!o->sens.empty()) {
      m.input(o->sens);
      report = load_sensitivity(o->sens);
    } else if (o->budget >= 16.0) {
      for (const LayerSize& s : ck.sizes) report.layers.push_back({s.id, 0.0, 0.0, 0.0});
    } else {
      throw std::invalid_argument("--sens is required for budgets below 16 bits");
    }
    const PrecisionMap map = assign_precisions(ck.sizes, report, o->budget, four);
    m.param("average_bits", number_json(average_bits(ck.sizes, map)));
    emit(m, o->out, precision_map_json(map));
  }});
}

void add_size(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string model;
    std::string map = "all_fp32";
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("size", "Model storage under a precision map");
  sub->add_option("--model", o->model, "checkpoint manifest")->required();
  sub->add_option("--map", o->map, "precision map file or all_fp32 / all_posit16 / all_8bit / all_fp4 ...");
  sub->add_option("--out", o->out, "JSON report (stdout when omitted)");
  reg.push_back({sub, [o](RunManifest& m) {
    const Checkpoint ck = load_model(m, o->model);
    const PrecisionMap map = map_arg(o->map, ids_of(ck.sizes), m);
    const ModelSize size = model_size_bytes(ck.sizes, map);
    std::uint64_t params = 0;
    json layers = json::array();
    for (const LayerSize& s : ck.sizes) {
      params += s.params;
      const FormatSpec f = map.at(s.id).weights;
      json lj;
      lj["id"] = s.id;
      lj["params"] = s.params;
      lj["format"] = f.name();
      lj["storage_bits"] = f.storage_bits();
      layers.push_back(std::move(lj));
    }
    json j;
    j["params"] = params;
    j["average_bits"] = ratio_json(size.weight_bits, params);
    j["weight_bits"] = size.weight_bits;
    j["weight_bytes"] = ratio_json(size.weight_bits, 8);
    j["metadata_bytes"] = size.metadata_bytes;
    j["total_bytes"] = ratio_json(size.weight_bits + 8 * size.metadata_bytes, 8);
    j["weight_mib"] = ratio_json(size.weight_bits, 8ull << 20);
    j["total_mib"] = ratio_json(size.weight_bits + 8 * size.metadata_bytes, 8ull << 20);
    j["layers"] = std::move(layers);
    emit(m, o->out, dump(j));
  }});
}

}  // namespace

void add_model_commands(CLI::App& app, const Globals& g, Registry& reg) {
  add_make_model(app, g, reg);
  add_quantize(app, reg);
  add_sens(app, g, reg);
  add_assign(app, reg);
  add_size(app, reg);
}

}  // namespace xrnpe::cli

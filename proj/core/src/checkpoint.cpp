#include "xrnpe/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xrnpe/error.hpp"
#include "xrnpe/exact.hpp"
#include "xrnpe/xten.hpp"

namespace xrnpe {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kMagic = "xrnpe-checkpoint";

json number_json(double v) {
  json j;
  j["exact"] = to_rational_string(rational_from_double(v));
  j["approx"] = v;
  return j;
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_object() && j.contains("exact")) return to_double(parse_rational(j.at("exact").get<std::string>()));
  throw DataError("expected a number or {exact, approx} object");
}

std::vector<double> read_vector(const fs::path& dir, const json& ref, std::size_t expected, const std::string& what) {
  const Tensor t = xten::read_file(dir / ref.get<std::string>());
  if (t.dtype != DType::Real64) throw DataError(what + " must be stored as real64");
  if (t.size() != expected) {
    throw DataError(what + " has " + std::to_string(t.size()) + " elements, expected " + std::to_string(expected));
  }
  return t.to_reals();
}

FormatSpec format_from_json(const json& j) {
  const std::string name = j.get<std::string>();
  const auto f = parse_format(name);
  if (!f) throw DataError("unknown format '" + name + "'");
  return *f;
}

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

bool Checkpoint::has_grads() const {
  if (grads.empty()) return false;
  for (const auto& g : grads) {
    if (g.empty()) return false;
  }
  return true;
}

std::vector<LayerTensor> Checkpoint::layer_tensors() const {
  if (size_only) throw DataError("checkpoint has no weights (size-only model)");
  return net.layer_tensors(has_grads() ? std::span<const std::vector<double>>(grads)
                                       : std::span<const std::vector<double>>{});
}

Checkpoint load_checkpoint(const fs::path& manifest) {
  const std::string text = read_text(manifest);
  return guarded([&] {
    const json j = json::parse(text);
    if (j.value("format", "") != kMagic) throw DataError(manifest.string() + ": not an xrnpe checkpoint");
    if (j.value("version", 0) != 1) throw DataError(manifest.string() + ": unsupported checkpoint version");
    const fs::path dir = manifest.parent_path();
    Checkpoint ck;
    if (j.contains("loss")) ck.net.loss = nn::parse_loss(j.at("loss").get<std::string>());
    const json& layers = j.at("layers");
    if (!layers.is_array() || layers.empty()) throw DataError(manifest.string() + ": no layers");
    ck.size_only = !layers.front().contains("weights");
    for (const json& lj : layers) {
      const std::string id = lj.at("id").get<std::string>();
      if (ck.size_only) {
        if (lj.contains("weights")) throw DataError("mixed size-only and full layers");
        const auto params = lj.at("params").get<std::int64_t>();
        if (params <= 0) throw DataError("layer '" + id + "' params must be positive");
        ck.sizes.push_back({id, static_cast<std::uint64_t>(params)});
        continue;
      }
      const nn::LayerKind kind = nn::parse_layer_kind(lj.at("kind").get<std::string>());
      const nn::Activation act = nn::parse_activation(lj.value("activation", "relu"));
      nn::Layer l;
      if (kind == nn::LayerKind::Dense) {
        l = nn::Layer::dense(id, lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>(), act);
      } else {
        const json& c = lj.at("conv");
        nn::ConvShape s;
        s.in_channels = c.at("in_channels").get<int>();
        s.in_height = c.at("in_height").get<int>();
        s.in_width = c.at("in_width").get<int>();
        s.out_channels = c.at("out_channels").get<int>();
        s.kernel = c.at("kernel").get<int>();
        s.stride = c.value("stride", 1);
        l = nn::Layer::conv2d(id, s, act);
      }
      if (lj.contains("alpha")) l.alpha = number_from_json(lj.at("alpha"));
      l.weights = read_vector(dir, lj.at("weights"), l.weights.size(), "layer '" + id + "' weights");
      if (lj.contains("bias")) l.bias = read_vector(dir, lj.at("bias"), l.bias.size(), "layer '" + id + "' bias");
      ck.grads.push_back(lj.contains("grad")
                             ? read_vector(dir, lj.at("grad"), l.weights.size(), "layer '" + id + "' grad")
                             : std::vector<double>{});
      ck.net.layers.push_back(std::move(l));
    }
    if (!ck.size_only) {
      ck.net.validate();
      ck.sizes = ck.net.sizes();
    }
    return ck;
  });
}

void save_checkpoint(const fs::path& manifest, const nn::Network& net, std::span<const std::vector<double>> grads) {
  net.validate();
  if (!grads.empty() && grads.size() != net.layers.size()) throw DataError("gradient count does not match layers");
  const fs::path dir = manifest.parent_path();
  const std::string stem = manifest.stem().string();
  json j;
  j["format"] = kMagic;
  j["version"] = 1;
  j["loss"] = nn::to_string(net.loss);
  json layers = json::array();
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const nn::Layer& l = net.layers[i];
    json lj;
    lj["id"] = l.id;
    lj["kind"] = nn::to_string(l.kind);
    lj["in"] = l.in;
    lj["out"] = l.out;
    if (l.kind == nn::LayerKind::Conv2d) {
      lj["conv"] = {{"in_channels", l.conv.in_channels}, {"in_height", l.conv.in_height},
                    {"in_width", l.conv.in_width},       {"out_channels", l.conv.out_channels},
                    {"kernel", l.conv.kernel},           {"stride", l.conv.stride}};
    }
    lj["activation"] = nn::to_string(l.activation);
    if (l.activation == nn::Activation::Pact) lj["alpha"] = number_json(l.alpha);
    const auto put = [&](const std::string& tag, std::span<const double> values, std::vector<std::uint32_t> dims) {
      const std::string name = stem + "." + l.id + "." + tag + ".xten";
      xten::write_file(dir / name, Tensor::from_reals(std::move(dims), values));
      lj[tag == "w" ? "weights" : tag == "b" ? "bias" : "grad"] = name;
    };
    const auto rows = static_cast<std::uint32_t>(l.weight_rows());
    const auto cols = static_cast<std::uint32_t>(l.weight_cols());
    put("w", l.weights, {rows, cols});
    put("b", l.bias, {rows});
    if (!grads.empty() && !grads[i].empty()) {
      if (grads[i].size() != l.weights.size()) throw DataError("layer '" + l.id + "' gradient size mismatch");
      put("g", grads[i], {rows, cols});
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  write_text(manifest, j.dump(2) + "\n");
}

void save_size_model(const fs::path& manifest, std::span<const LayerSize> layers) {
  json j;
  j["format"] = kMagic;
  j["version"] = 1;
  json arr = json::array();
  for (const LayerSize& l : layers) arr.push_back({{"id", l.id}, {"params", l.params}});
  j["layers"] = std::move(arr);
  write_text(manifest, j.dump(2) + "\n");
}

std::string precision_map_json(const PrecisionMap& map) {
  json j;
  json arr = json::array();
  for (const LayerAssignment& a : map.layers) {
    arr.push_back({{"id", a.id}, {"weights", a.weights.name()}, {"activations", a.activations.name()}});
  }
  j["layers"] = std::move(arr);
  return j.dump(2) + "\n";
}

PrecisionMap parse_precision_map(const std::string& text) {
  return guarded([&] {
    const json j = json::parse(text);
    PrecisionMap map;
    for (const json& lj : j.at("layers")) {
      LayerAssignment a;
      a.id = lj.at("id").get<std::string>();
      a.weights = format_from_json(lj.at("weights"));
      a.activations = lj.contains("activations") ? format_from_json(lj.at("activations")) : a.weights;
      if (map.find(a.id)) throw DataError("duplicate layer '" + a.id + "' in precision map");
      map.layers.push_back(a);
    }
    return map;
  });
}

PrecisionMap load_precision_map(const fs::path& path) { return parse_precision_map(read_text(path)); }

std::string sensitivity_json(const SensitivityReport& report) {
  json j;
  json arr = json::array();
  for (const SensitivityEntry& e : report.layers) {
    json lj;
    lj["id"] = e.id;
    lj["s8"] = number_json(e.s8);
    lj["s4"] = number_json(e.s4);
    lj["score"] = number_json(e.score);
    arr.push_back(std::move(lj));
  }
  j["layers"] = std::move(arr);
  j["ranking"] = report.ranking;
  return j.dump(2) + "\n";
}

SensitivityReport parse_sensitivity(const std::string& text) {
  return guarded([&] {
    const json j = json::parse(text);
    SensitivityReport r;
    for (const json& lj : j.at("layers")) {
      SensitivityEntry e;
      e.id = lj.at("id").get<std::string>();
      e.s8 = number_from_json(lj.at("s8"));
      e.s4 = number_from_json(lj.at("s4"));
      e.score = lj.contains("score") ? number_from_json(lj.at("score")) : layer_score(e.s8, e.s4);
      r.layers.push_back(e);
    }
    r.ranking = j.at("ranking").get<std::vector<std::string>>();
    if (r.ranking.size() != r.layers.size()) throw DataError("sensitivity ranking does not cover every layer");
    return r;
  });
}

SensitivityReport load_sensitivity(const fs::path& path) { return parse_sensitivity(read_text(path)); }

}  // namespace xrnpe

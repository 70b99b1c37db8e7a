// codec, make-tensor, dot, gemm.
#include <sstream>

#include "common.hpp"
#include "xrnpe/codec.hpp"
#include "xrnpe/error.hpp"
#include "xrnpe/rng.hpp"
#include "xrnpe/simd_mac.hpp"
#include "xrnpe/xten.hpp"

namespace xrnpe::cli {

namespace {

std::vector<std::uint32_t> parse_shape(const std::string& text) {
  std::vector<std::uint32_t> dims;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.empty()) continue;
    std::size_t used = 0;
    const unsigned long v = std::stoul(part, &used);
    if (used != part.size() || v > 0xFFFFFFFFul) throw std::invalid_argument("bad --shape entry '" + part + "'");
    dims.push_back(static_cast<std::uint32_t>(v));
  }
  if (dims.size() > 255) throw std::invalid_argument("rank above 255");
  return dims;
}

RoundingMode rounding_arg(const std::string& name) {
  if (name == "fused") return RoundingMode::PerDot;
  if (name == "per-mac") return RoundingMode::PerMac;
  throw std::invalid_argument("--rounding must be fused or per-mac");
}

json pattern_json(std::uint32_t bits, const FormatSpec& f) {
  std::ostringstream hex;
  hex << "0x" << std::hex << bits;
  json j;
  j["bits"] = hex.str();
  const DecodedNumber d = decode(bits, f);
  j["class"] = to_string(d.cls);
  if (d.is_nar()) {
    j["exact"] = "NaR";
    j["approx"] = nullptr;
  } else {
    const json v = rational_json(exact_value(d));
    j["exact"] = v["exact"];
    j["approx"] = v["approx"];
  }
  return j;
}

Tensor load_tensor(RunManifest& m, const std::string& path) {
  m.input(path);
  return xten::read_file(path);
}

void add_codec(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string format;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("codec", "Conformance table: every bit pattern of a format");
  sub->add_option("--format", o->format, "posit16_1, posit8_0, posit4_1 or fp4")->required();
  sub->add_option("--out", o->out, "CSV path (stdout when omitted)");
  reg.push_back({sub, [o](RunManifest& m) {
    const FormatSpec f = format_arg(o->format);
    if (f.is_real()) throw std::invalid_argument("codec tables exist for posit and fp4 formats only");
    m.format("format", f.name());
    std::ostringstream csv;
    write_conformance_csv(csv, f);
    emit(m, o->out, csv.str());
  }});
}

void add_make_tensor(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    std::string dtype;
    std::string shape;
    std::string fill = "random";
    double scale = 1.0;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("make-tensor", "Write an XTEN tensor");
  sub->add_option("--dtype", o->dtype, "element format")->required();
  sub->add_option("--shape", o->shape, "comma-separated dims; empty for a scalar");
  sub->add_option("--fill", o->fill, "random (finite patterns), normal (scaled reals), zeros, identity")
      ->check(CLI::IsMember({"random", "normal", "zeros", "identity"}));
  sub->add_option("--scale", o->scale, "standard deviation for --fill normal");
  sub->add_option("--out", o->out, "XTEN path")->required();
  reg.push_back({sub, [o, &g](RunManifest& m) {
    const FormatSpec f = format_arg(o->dtype);
    const DType dtype = dtype_of(f);
    const std::vector<std::uint32_t> dims = parse_shape(o->shape);
    m.format("dtype", f.name());
    m.param("shape", dims);
    m.param("fill", o->fill);
    m.seed(g.seed);
    Tensor t = Tensor::zeros(dtype, dims);
    Rng rng(g.seed);
    if (o->fill == "random") {
      if (f.is_real()) throw std::invalid_argument("--fill random needs a posit or fp4 dtype; use normal");
      for (auto& v : t.data) {
        std::uint32_t bits = 0;
        do {
          bits = static_cast<std::uint32_t>(rng.below(std::uint64_t{f.mask()} + 1));
        } while (is_nar(bits, f));
        v = bits;
      }
    } else if (o->fill == "normal") {
      std::vector<double> values(t.size());
      for (double& v : values) v = rng.normal(0.0, o->scale);
      t = Tensor::encode_reals(dtype, dims, values);
    } else if (o->fill == "identity") {
      if (dims.size() != 2) throw std::invalid_argument("--fill identity needs a rank-2 shape");
      std::vector<double> values(t.size(), 0.0);
      for (std::uint32_t i = 0; i < std::min(dims[0], dims[1]); ++i) values[std::size_t{i} * dims[1] + i] = 1.0;
      t = Tensor::encode_reals(dtype, dims, values);
    }
    xten::write_file(o->out, t);
    m.output(o->out);
  }});
}

void add_dot(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string a;
    std::string b;
    std::string rounding = "fused";
    std::string output_format;
    std::string out;
    std::string stats;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("dot", "Fused dot product of two vectors on one SIMD MAC lane");
  sub->add_option("--a", o->a, "XTEN vector")->required();
  sub->add_option("--b", o->b, "XTEN vector")->required();
  sub->add_option("--rounding", o->rounding, "fused (one rounding) or per-mac");
  sub->add_option("--output-format", o->output_format, "format the quire rounds into (default: operand format)");
  sub->add_option("--out", o->out, "result as a one-element XTEN");
  sub->add_option("--stats", o->stats, "JSON report (stdout when omitted)");
  reg.push_back({sub, [o](RunManifest& m) {
    const Tensor a = load_tensor(m, o->a);
    const Tensor b = load_tensor(m, o->b);
    if (a.rank() != 1 || b.rank() != 1) throw DataError("dot needs rank-1 tensors");
    if (a.dtype != b.dtype) throw DataError("operand dtypes differ");
    if (a.size() != b.size()) throw DataError("operand lengths differ");
    if (a.size() == 0) throw DataError("empty operands");
    const FormatSpec f = a.format();
    if (f.is_real()) throw DataError("dot needs posit or fp4 operands");
    const FormatSpec out_f = o->output_format.empty() ? f : format_arg(o->output_format);
    const RoundingMode rounding = rounding_arg(o->rounding);
    m.format("operands", f.name());
    m.format("output", out_f.name());
    m.param("rounding", o->rounding);

    const PrecSel sel = PrecSel::for_format(f);
    std::vector<std::uint16_t> wa(a.size());
    std::vector<std::uint16_t> wb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      wa[i] = insert_lane(0, 0, a.bits(i), sel);
      wb[i] = insert_lane(0, 0, b.bits(i), sel);
    }
    SimdMac mac(sel, out_f);
    const DotResult r = mac.dot(wa, wb, rounding, 1);
    json j;
    j["format"] = f.name();
    j["output_format"] = out_f.name();
    j["rounding"] = o->rounding;
    j["length"] = a.size();
    j["result"] = pattern_json(r.lanes[0], out_f);
    j["mac_ops"] = r.stats.mac_ops;
    j["operand_gated"] = r.stats.operand_gated;
    j["rmmec_cells_fired"] = r.stats.cells.cells_fired;
    j["rmmec_cells_gated"] = r.stats.cells.cells_gated;
    if (!o->out.empty()) {
      Tensor c = Tensor::zeros(dtype_of(out_f), {1});
      c.data[0] = r.lanes[0];
      xten::write_file(o->out, c);
      m.output(o->out);
    }
    emit(m, o->stats, dump(j));
  }});
}

void add_gemm(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    std::string a;
    std::string b;
    std::string mode;
    int array = 8;
    std::uint64_t k_max = 4096;
    std::string rounding = "fused";
    std::string output_format;
    std::string out;
    std::string stats;
    std::string stats_csv;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("gemm", "C = A x B on the morphable array");
  sub->add_option("--a", o->a, "XTEN M x K")->required();
  sub->add_option("--b", o->b, "XTEN K x N")->required();
  sub->add_option("--mode", o->mode, "x4_fp4, x4_posit4, x2_posit8 or x1_posit16 (default: from dtype)");
  sub->add_option("--array", o->array, "array side")->check(CLI::IsMember({8, 16}));
  sub->add_option("--k-max", o->k_max, "quire sizing bound on K");
  sub->add_option("--rounding", o->rounding, "fused (one rounding) or per-mac");
  sub->add_option("--output-format", o->output_format, "format of C (default: operand format)");
  sub->add_option("--out", o->out, "C as XTEN");
  sub->add_option("--stats", o->stats, "JSON run statistics (stdout when omitted)");
  sub->add_option("--stats-csv", o->stats_csv, "CSV run statistics");
  reg.push_back({sub, [o, &g](RunManifest& m) {
    const Tensor a = load_tensor(m, o->a);
    const Tensor b = load_tensor(m, o->b);
    ArrayConfig cfg = array_arg(o->array, g.threads);
    cfg.k_max = o->k_max;
    cfg.rounding = rounding_arg(o->rounding);
    if (a.dtype == DType::Real64) throw DataError("gemm needs posit or fp4 operands");
    cfg.sel = o->mode.empty() ? PrecSel::for_format(a.format()) : parse_mode(o->mode);
    if (!o->output_format.empty()) cfg.output = format_arg(o->output_format);
    m.format("mode", mode_name(cfg.sel));
    m.format("output", cfg.output_format().name());
    m.param("array", o->array);
    m.param("rounding", o->rounding);
    m.param("k_max", o->k_max);
    const GemmResult r = gemm(a, b, cfg);
    if (!o->out.empty()) {
      xten::write_file(o->out, r.c);
      m.output(o->out);
    }
    if (!o->stats_csv.empty()) emit(m, o->stats_csv, report_csv(r.stats, cfg));
    emit(m, o->stats, report_json(r.stats, cfg));
  }});
}

}  // namespace

void add_tensor_commands(CLI::App& app, const Globals& g, Registry& reg) {
  add_codec(app, reg);
  add_make_tensor(app, g, reg);
  add_dot(app, reg);
  add_gemm(app, g, reg);
}

}  // namespace xrnpe::cli

#include "common.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "xrnpe/checkpoint.hpp"
#include "xrnpe/error.hpp"

namespace xrnpe::cli {

json number_json(double v) {
  json j;
  j["exact"] = std::isfinite(v) ? to_rational_string(rational_from_double(v)) : std::string("nan");
  j["approx"] = v;
  return j;
}

json rational_json(const Rational& r) {
  json j;
  j["exact"] = to_rational_string(r);
  j["approx"] = to_double(r);
  return j;
}

json ratio_json(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return rational_json(Rational(0));
  return rational_json(Rational(BigInt(num), BigInt(den)));
}

FormatSpec format_arg(const std::string& name) {
  if (const auto f = parse_format(name)) return *f;
  throw std::invalid_argument("unknown format '" + name + "' (expected posit16_1, posit8_0, posit4_1, fp4 or real64)");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void emit(RunManifest& m, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  write_text(path, text);
  m.output(path);
}

void DataOptions::add_to(CLI::App* app) {
  app->add_option("--data", path, "CSV dataset (header row, 'label' or 'target*' columns)");
  app->add_option("--classes", classes, "synthetic set: classes")->check(CLI::Range(2, 1000));
  app->add_option("--dims", dims, "synthetic set: feature count")->check(CLI::Range(1, 100000));
  app->add_option("--samples", samples, "synthetic set: samples per class")->check(CLI::Range(1, 10000000));
  app->add_option("--spread", spread, "synthetic set: cluster standard deviation")->check(CLI::NonNegativeNumber);
  app->add_option("--test-fraction", test_fraction, "held-out fraction")->check(CLI::Range(0.0, 0.95));
}

nn::Dataset DataOptions::load(RunManifest& m, std::uint64_t seed) const {
  if (!path.empty()) {
    m.input(path);
    return nn::load_csv(path, test_fraction, seed);
  }
  m.param("dataset", json{{"classes", classes}, {"dims", dims}, {"samples_per_class", samples}, {"spread", spread}});
  return nn::make_gaussian_clusters(classes, dims, samples, spread, seed, test_fraction);
}

PrecisionMap map_arg(const std::string& spec, const std::vector<std::string>& ids, RunManifest& m) {
  static const std::vector<std::pair<std::string, FormatSpec>> named{
      {"all_fp32", kReal64},     {"all_real64", kReal64}, {"all_posit16", kPosit16_1}, {"all_posit8", kPosit8_0},
      {"all_8bit", kPosit8_0},   {"all_posit4", kPosit4_1}, {"all_fp4", kFp4}};
  for (const auto& [name, f] : named) {
    if (spec == name) {
      m.format("map", name);
      return PrecisionMap::uniform(ids, f);
    }
  }
  if (!std::filesystem::exists(spec)) {
    throw std::invalid_argument("--map must be a precision-map file or one of all_fp32, all_posit16, all_posit8, "
                                "all_8bit, all_posit4, all_fp4");
  }
  m.input(spec);
  m.format("map", spec);
  return load_precision_map(spec);
}

ArrayConfig array_arg(int size, int threads) {
  ArrayConfig cfg;
  cfg.rows = size;
  cfg.cols = size;
  cfg.threads = threads;
  cfg.validate();
  return cfg;
}

}  // namespace xrnpe::cli

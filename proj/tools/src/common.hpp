#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "manifest.hpp"
#include "xrnpe/dataset.hpp"
#include "xrnpe/exact.hpp"
#include "xrnpe/format_spec.hpp"
#include "xrnpe/morph_array.hpp"
#include "xrnpe/quantizer.hpp"

namespace xrnpe::cli {

using json = nlohmann::ordered_json;

/// Options shared by every subcommand.
struct Globals {
  int threads = 1;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string manifest;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<void(RunManifest&)> run;
};

using Registry = std::vector<Command>;

void add_tensor_commands(CLI::App& app, const Globals& g, Registry& reg);
void add_model_commands(CLI::App& app, const Globals& g, Registry& reg);
void add_train_commands(CLI::App& app, const Globals& g, Registry& reg);

// Report helpers: exact rationals as strings next to float64 values.
json number_json(double v);
json rational_json(const Rational& r);
json ratio_json(std::uint64_t num, std::uint64_t den);

/// Throws std::invalid_argument listing the accepted names.
FormatSpec format_arg(const std::string& name);

/// Writes to `path`, or stdout when it is empty or "-". Records the output.
void emit(RunManifest& m, const std::string& path, const std::string& text);
std::string dump(const json& j);

/// --data PATH, or a synthetic Gaussian-cluster set.
struct DataOptions {
  std::string path;
  int classes = 2;
  int dims = 8;
  int samples = 150;
  double spread = 0.35;
  double test_fraction = 0.25;

  void add_to(CLI::App* app);
  nn::Dataset load(RunManifest& m, std::uint64_t seed) const;
};

/// Named uniform maps (all_fp32, all_posit16, all_posit8, all_8bit, all_posit4,
/// all_fp4) or a precision-map JSON file.
PrecisionMap map_arg(const std::string& spec, const std::vector<std::string>& ids, RunManifest& m);

ArrayConfig array_arg(int size, int threads);

}  // namespace xrnpe::cli

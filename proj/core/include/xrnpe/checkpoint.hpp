// Model checkpoints and the JSON forms of precision maps and sensitivity
// reports.
//
// A checkpoint is a JSON manifest
//   {"format": "xrnpe-checkpoint", "version": 1, "loss": ..., "layers": [...]}
// whose layers reference Real64 XTEN files (weights, bias, optional grad)
// relative to the manifest's directory. Layers that carry only "params" make
// a size-only model, usable for size accounting but not for inference.
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrnpe/network.hpp"
#include "xrnpe/quantizer.hpp"

namespace xrnpe {

struct Checkpoint {
  nn::Network net;                         // empty when size_only
  std::vector<std::vector<double>> grads;  // per layer; empty vector when absent
  std::vector<LayerSize> sizes;
  bool size_only = false;

  bool has_grads() const;
  /// Throws DataError for a size-only checkpoint.
  std::vector<LayerTensor> layer_tensors() const;
};

/// Throws DataError on malformed manifests or payloads.
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

/// Writes the manifest and one XTEN file per tensor next to it.
void save_checkpoint(const std::filesystem::path& manifest, const nn::Network& net,
                     std::span<const std::vector<double>> grads = {});

void save_size_model(const std::filesystem::path& manifest, std::span<const LayerSize> layers);

std::string precision_map_json(const PrecisionMap& map);
/// Throws DataError on malformed JSON or unknown formats.
PrecisionMap parse_precision_map(const std::string& json);
PrecisionMap load_precision_map(const std::filesystem::path& path);

std::string sensitivity_json(const SensitivityReport& report);
SensitivityReport parse_sensitivity(const std::string& json);
SensitivityReport load_sensitivity(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace xrnpe

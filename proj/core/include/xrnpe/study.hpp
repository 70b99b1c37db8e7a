// Desk-scale precision study: train a small classifier in double, then
// measure accuracy when its layers run on the array in each format, before
// and after quantization-aware training.
#pragma once

#include <string>
#include <vector>

#include "xrnpe/training.hpp"

namespace xrnpe::nn {

struct StudyConfig {
  int classes = 4;
  int dims = 16;
  int samples_per_class = 400;
  double spread = 0.6;
  std::uint64_t seed = 7;  // data, weights and shuffling
  std::vector<std::size_t> hidden{32, 32};
  Activation activation = Activation::Pact;
  double alpha = 4.0;
  TrainConfig train{40, 0.05, 32, 7, 1};
  TrainConfig qat{15, 0.01, 32, 8, 1};
  ArrayConfig array;
  /// Formats evaluated after post-training quantization.
  std::vector<FormatSpec> ptq{kPosit16_1, kPosit8_0, kPosit4_1, kFp4};
  /// Formats that also get a QAT run.
  std::vector<FormatSpec> qat_formats{kFp4, kPosit4_1};
};

struct StudyRow {
  FormatSpec format;
  bool qat = false;
  EvalResult result;
};

struct StudyResult {
  EvalResult reference;
  TrainHistory history;
  std::vector<StudyRow> rows;

  /// Throws std::out_of_range when the combination was not run.
  const StudyRow& find(const FormatSpec& format, bool qat) const;
};

StudyResult run_precision_study(const StudyConfig& cfg);

/// One row per run, reference first. Accuracy as an exact ratio and a float,
/// plus the drop against the reference in percentage points.
std::string study_csv(const StudyResult& result);

}  // namespace xrnpe::nn

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrnpe/network.hpp"

namespace xrnpe::nn {

struct Dataset {
  Matrix features;
  std::vector<int> labels;  // classification
  Matrix targets;           // regression; empty for classification
  int num_classes = 0;
  std::vector<std::size_t> train;  // row indices
  std::vector<std::size_t> test;

  bool is_regression() const { return targets.rows > 0; }
  std::size_t size() const { return features.rows; }
  Batch batch(std::span<const std::size_t> rows) const;
  Batch train_batch() const { return batch(train); }
  Batch test_batch() const { return batch(test); }
};

/// `classes` Gaussian blobs in `dims` dimensions. Centres are drawn uniformly
/// in [-1, 1]^dims, samples are centre + spread * N(0, I).
Dataset make_gaussian_clusters(int classes, int dims, int samples_per_class, double spread, std::uint64_t seed,
                               double test_fraction = 0.25);

/// Shuffles rows with `seed` and moves the last `test_fraction` to the test split.
void split(Dataset& data, double test_fraction, std::uint64_t seed);

/// CSV with a header row. A column named "label" holds integer class ids;
/// columns named "target*" make a regression set; the rest are features.
/// Throws DataError on malformed input.
Dataset load_csv(const std::filesystem::path& path, double test_fraction = 0.25, std::uint64_t seed = 1);
void save_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace xrnpe::nn

#include "xrnpe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "xrnpe/error.hpp"
#include "xrnpe/rng.hpp"

namespace xrnpe::nn {

Batch Dataset::batch(std::span<const std::size_t> rows) const {
  Batch b;
  b.x = Matrix(rows.size(), features.cols);
  if (is_regression()) b.targets = Matrix(rows.size(), targets.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= features.rows) throw DataError("row index " + std::to_string(r) + " out of range");
    std::copy_n(features.row(r).begin(), features.cols, b.x.row(i).begin());
    if (is_regression()) {
      std::copy_n(targets.row(r).begin(), targets.cols, b.targets.row(i).begin());
    } else {
      b.labels.push_back(labels[r]);
    }
  }
  return b;
}

void split(Dataset& data, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) throw std::invalid_argument("test fraction must be in [0, 1)");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  const auto test_count = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(order.size())));
  const std::size_t train_count = order.size() - test_count;
  data.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  data.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
  std::sort(data.train.begin(), data.train.end());
  std::sort(data.test.begin(), data.test.end());
}

Dataset make_gaussian_clusters(int classes, int dims, int samples_per_class, double spread, std::uint64_t seed,
                               double test_fraction) {
  if (classes < 2 || dims < 1 || samples_per_class < 1 || !(spread >= 0.0)) {
    throw std::invalid_argument("cluster dataset needs >= 2 classes, >= 1 dims, >= 1 sample, spread >= 0");
  }
  Rng rng(seed);
  Dataset data;
  data.num_classes = classes;
  const auto cls = static_cast<std::size_t>(classes);
  const auto d = static_cast<std::size_t>(dims);
  Matrix centres(cls, d);
  for (double& c : centres.data) c = rng.uniform(-1.0, 1.0);
  data.features = Matrix(cls * static_cast<std::size_t>(samples_per_class), d);
  std::size_t row = 0;
  for (int s = 0; s < samples_per_class; ++s) {
    for (std::size_t c = 0; c < cls; ++c, ++row) {
      for (std::size_t j = 0; j < d; ++j) data.features.at(row, j) = centres.at(c, j) + spread * rng.normal();
      data.labels.push_back(static_cast<int>(c));
    }
  }
  split(data, test_fraction, seed ^ 0x5eedu);
  return data;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, double test_fraction, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const std::vector<std::string> header = split_line(line);
  int label_col = -1;
  std::vector<std::size_t> feature_cols;
  std::vector<std::size_t> target_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "label") {
      if (label_col >= 0) throw DataError(path.string() + ": duplicate label column");
      label_col = static_cast<int>(i);
    } else if (header[i].rfind("target", 0) == 0) {
      target_cols.push_back(i);
    } else {
      feature_cols.push_back(i);
    }
  }
  if (feature_cols.empty()) throw DataError(path.string() + ": no feature columns");
  if ((label_col >= 0) == !target_cols.empty()) {
    throw DataError(path.string() + ": need either a label column or target columns");
  }

  Dataset data;
  std::vector<double> feats;
  std::vector<double> targs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t c : feature_cols) feats.push_back(parse_number(fields[c], line_no));
    for (std::size_t c : target_cols) targs.push_back(parse_number(fields[c], line_no));
    if (label_col >= 0) {
      const double v = parse_number(fields[static_cast<std::size_t>(label_col)], line_no);
      if (v < 0 || v != std::floor(v) || v > 1e6) {
        throw DataError("line " + std::to_string(line_no) + ": label must be a non-negative integer");
      }
      data.labels.push_back(static_cast<int>(v));
    }
  }
  const std::size_t rows = feats.size() / feature_cols.size();
  if (rows == 0) throw DataError(path.string() + ": no data rows");
  data.features = Matrix(rows, feature_cols.size());
  data.features.data = std::move(feats);
  if (!target_cols.empty()) {
    data.targets = Matrix(rows, target_cols.size());
    data.targets.data = std::move(targs);
  } else {
    data.num_classes = *std::max_element(data.labels.begin(), data.labels.end()) + 1;
    if (data.num_classes < 2) throw DataError(path.string() + ": need at least two classes");
  }
  split(data, test_fraction, seed);
  return data;
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t j = 0; j < data.features.cols; ++j) out << 'x' << j << ',';
  if (data.is_regression()) {
    for (std::size_t j = 0; j < data.targets.cols; ++j) out << (j ? "," : "") << "target" << j;
  } else {
    out << "label";
  }
  out << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.features.row(r)) out << v << ',';
    if (data.is_regression()) {
      const auto t = data.targets.row(r);
      for (std::size_t j = 0; j < t.size(); ++j) out << (j ? "," : "") << t[j];
    } else {
      out << data.labels[r];
    }
    out << '\n';
  }
}

}  // namespace xrnpe::nn

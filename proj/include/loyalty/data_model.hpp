#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loyalty {

struct Record {
  std::string id;
  std::string text;
  std::vector<double> features;
  int rating = 0;  // 7-point Likert, 1..7
};

struct Dataset {
  std::vector<Record> records;
  std::vector<std::string> schema;  // feature column names, in feature order

  std::size_t size() const { return records.size(); }
};

// Per-feature z-score statistics. Constant features (zero spread on the
// training rows) normalize to 0.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation
  std::vector<bool> constant;

  std::vector<double> apply(std::span<const double> features) const;
};

struct LabeledSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::vector<int> labels;  // aligned with Dataset::records
  Normalizer normalizer;
};

struct SplitOptions {
  double test_fraction = 0.25;
  double val_fraction_of_train = 0.15;
  std::uint64_t seed = 0;
  bool stratified = true;
};

// Reads a dataset from CSV. Required columns: id, text, rating and every
// schema column, in any order. Errors name the offending 1-based data row.
Dataset load_csv(const std::string& path, const std::vector<std::string>& schema);
Dataset parse_csv(std::string_view text, const std::vector<std::string>& schema);

void write_csv(const std::string& path, const Dataset& dataset);

// Loyalty label: 1 iff the rating is 6 or 7.
int binarize_rating(int rating);

// Partitions record indices into train / validation / test. The test part has
// round(test_fraction * N) rows and validation round(val_fraction * remaining)
// rows; with stratification both are allocated per class by largest
// remainder. Index lists come back sorted. The returned normalizer is fitted
// on the train part only.
LabeledSplit split(const Dataset& dataset, const SplitOptions& options);

Normalizer fit_normalizer(const Dataset& dataset, std::span<const std::size_t> train_indices);

}  // namespace loyalty

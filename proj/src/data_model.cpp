#include "loyalty/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_set>

#include "loyalty/csv.hpp"
#include "loyalty/error.hpp"
#include "loyalty/format.hpp"
#include "loyalty/rng.hpp"

namespace loyalty {
namespace {

std::string row_label(std::size_t data_row) { return "row " + std::to_string(data_row); }

bool is_blank_row(const csv::Row& row) { return row.size() == 1 && trim(row[0]).empty(); }

// Distributes `total` across groups proportionally to `sizes` using the
// largest-remainder rule; ties go to the lower group index.
std::vector<std::size_t> allocate(std::size_t total, const std::vector<std::size_t>& sizes) {
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> quota(sizes.size(), 0);
  if (n == 0) return quota;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double exact = static_cast<double>(total) * static_cast<double>(sizes[g]) / static_cast<double>(n);
    quota[g] = std::min(sizes[g], static_cast<std::size_t>(std::floor(exact)));
    assigned += quota[g];
    remainders.emplace_back(exact - std::floor(exact), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k) {
    const auto g = remainders[k].second;
    if (quota[g] < sizes[g]) {
      ++quota[g];
      ++assigned;
    }
  }
  return quota;
}

std::size_t round_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

int binarize_rating(int rating) {
  if (rating < 1 || rating > 7) throw DataError("rating " + std::to_string(rating) + " outside 1..7");
  return rating >= 6 ? 1 : 0;
}

Dataset parse_csv(std::string_view text, const std::vector<std::string>& schema) {
  auto rows = csv::parse(text);
  if (rows.empty()) throw DataError("csv: missing header row");
  const auto& header = rows.front();

  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("csv header row: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = column("id");
  const auto text_col = column("text");
  const auto rating_col = column("rating");
  std::vector<std::size_t> feature_cols;
  for (const auto& name : schema) feature_cols.push_back(column(name));

  Dataset dataset;
  dataset.schema = schema;
  std::unordered_set<std::string> seen;
  std::size_t data_row = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (is_blank_row(row)) continue;
    ++data_row;
    if (row.size() != header.size()) {
      throw DataError(row_label(data_row) + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(row.size()));
    }
    Record rec;
    rec.id = row[id_col];
    if (rec.id.empty()) throw DataError(row_label(data_row) + ": empty id");
    if (!seen.insert(rec.id).second) throw DataError(row_label(data_row) + ": duplicate id '" + rec.id + "'");
    rec.text = row[text_col];
    const auto rating = parse_int(row[rating_col]);
    if (!rating || *rating < 1 || *rating > 7) {
      throw DataError(row_label(data_row) + ": malformed rating '" + row[rating_col] + "' (expected 1..7)");
    }
    rec.rating = static_cast<int>(*rating);
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto value = parse_double(row[feature_cols[f]]);
      if (!value || !std::isfinite(*value)) {
        throw DataError(row_label(data_row) + ": non-numeric value '" + row[feature_cols[f]] + "' in column '" +
                        schema[f] + "'");
      }
      rec.features.push_back(*value);
    }
    dataset.records.push_back(std::move(rec));
  }
  return dataset;
}

Dataset load_csv(const std::string& path, const std::vector<std::string>& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_csv(text, schema);
}

void write_csv(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
  csv::Row header{"id", "text", "rating"};
  header.insert(header.end(), dataset.schema.begin(), dataset.schema.end());
  csv::write_row(out, header);
  for (const auto& rec : dataset.records) {
    csv::Row row{rec.id, rec.text, std::to_string(rec.rating)};
    for (double v : rec.features) row.push_back(format_double(v));
    csv::write_row(out, row);
  }
  if (!out) throw RuntimeFailure("write failed for '" + path + "'");
}

LabeledSplit split(const Dataset& dataset, const SplitOptions& options) {
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw UsageError("test_fraction must lie in (0, 1)");
  }
  if (!(options.val_fraction_of_train >= 0.0 && options.val_fraction_of_train < 1.0)) {
    throw UsageError("val_fraction_of_train must lie in [0, 1)");
  }
  const std::size_t n = dataset.size();

  LabeledSplit out;
  out.labels.reserve(n);
  for (const auto& rec : dataset.records) out.labels.push_back(binarize_rating(rec.rating));

  // Group indices by class (a single group when not stratifying).
  std::vector<std::vector<std::size_t>> groups(options.stratified ? 2 : 1);
  for (std::size_t i = 0; i < n; ++i) groups[options.stratified ? out.labels[i] : 0].push_back(i);
  if (options.stratified) {
    for (int c = 0; c < 2; ++c) {
      if (groups[c].size() < 2) {
        throw DataError("cannot stratify: class " + std::to_string(c) + " has " + std::to_string(groups[c].size()) +
                        " member(s), need at least 2");
      }
    }
  }

  Engine rng(derive_seed(options.seed, "split"));
  for (auto& g : groups) shuffle(std::span<std::size_t>(g), rng);

  std::vector<std::size_t> sizes;
  for (const auto& g : groups) sizes.push_back(g.size());
  const auto test_quota = allocate(round_count(options.test_fraction, n), sizes);

  std::vector<std::size_t> remaining_sizes;
  for (std::size_t g = 0; g < groups.size(); ++g) remaining_sizes.push_back(sizes[g] - test_quota[g]);
  const std::size_t remaining = std::accumulate(remaining_sizes.begin(), remaining_sizes.end(), std::size_t{0});
  const auto val_quota = allocate(round_count(options.val_fraction_of_train, remaining), remaining_sizes);

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& members = groups[g];
    std::size_t k = 0;
    for (; k < test_quota[g]; ++k) out.test.push_back(members[k]);
    for (std::size_t v = 0; v < val_quota[g]; ++v, ++k) out.validation.push_back(members[k]);
    for (; k < members.size(); ++k) out.train.push_back(members[k]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());

  if (out.train.empty()) throw DataError("split leaves no training rows");
  out.normalizer = fit_normalizer(dataset, out.train);
  return out;
}

Normalizer fit_normalizer(const Dataset& dataset, std::span<const std::size_t> train_indices) {
  if (train_indices.empty()) throw DataError("fit_normalizer: empty training set");
  const std::size_t width = dataset.schema.size();
  Normalizer norm;
  norm.mean.assign(width, 0.0);
  norm.stddev.assign(width, 0.0);
  norm.constant.assign(width, false);
  const double count = static_cast<double>(train_indices.size());
  for (std::size_t f = 0; f < width; ++f) {
    double sum = 0.0;
    for (auto i : train_indices) sum += dataset.records[i].features[f];
    const double mean = sum / count;
    double sq = 0.0;
    for (auto i : train_indices) {
      const double d = dataset.records[i].features[f] - mean;
      sq += d * d;
    }
    norm.mean[f] = mean;
    norm.stddev[f] = std::sqrt(sq / count);
    norm.constant[f] = !(norm.stddev[f] > 0.0);
  }
  return norm;
}

std::vector<double> Normalizer::apply(std::span<const double> features) const {
  if (features.size() != mean.size()) {
    throw DataError("normalizer: expected " + std::to_string(mean.size()) + " features, got " +
                    std::to_string(features.size()));
  }
  std::vector<double> out(features.size());
  for (std::size_t f = 0; f < features.size(); ++f) {
    out[f] = constant[f] ? 0.0 : (features[f] - mean[f]) / stddev[f];
  }
  return out;
}

}  // namespace loyalty

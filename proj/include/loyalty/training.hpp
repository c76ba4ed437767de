#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loyalty/data_model.hpp"
#include "loyalty/embeddings.hpp"
#include "loyalty/network.hpp"
#include "loyalty/optim.hpp"

namespace loyalty {

enum class Monitor { validation, test };

Monitor parse_monitor(std::string_view name);
std::string_view to_string(Monitor monitor);

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 50;
  Monitor monitor = Monitor::validation;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ModelSpec {
  Modality modality = Modality::Both;
  std::vector<std::size_t> x2_hidden{10, 10};
  std::vector<std::size_t> out_hidden{10, 10};
};

// Row-aligned model inputs for every record: frozen text features (empty
// when no encoder is used), normalised profile features and labels.
struct TrainingData {
  Matrix x1;
  Matrix x2;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

// Aligns embeddings to the dataset by id and normalises the profile features
// with the split's train-only normalizer. `embeddings` may be null for X2-only
// work.
TrainingData build_training_data(const Dataset& dataset, const LabeledSplit& split,
                                 const EmbeddingMatrix* embeddings);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double monitor_acc = 0.0;
  double test_acc = 0.0;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct RunResult {
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double train_acc = 0.0;  // at best_epoch
  double monitor_acc = 0.0;
  double test_acc = 0.0;
  MLPParams params;  // snapshot at best_epoch
  std::vector<EpochLog> logs;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

// Sizes of the mini-batches one epoch over n rows is cut into; the last
// partial batch is kept.
std::vector<std::size_t> batch_sizes(std::size_t n, std::size_t batch_size);

// Epoch with the highest monitored accuracy; only a strictly greater value
// counts as an improvement, so ties keep the earliest epoch.
std::size_t best_epoch(std::span<const EpochLog> logs);

// True iff current_epoch - best_epoch >= patience.
bool early_stop_check(std::span<const EpochLog> logs, std::size_t patience);

double evaluate(const MLPParams& params, const TrainingData& data, std::span<const std::size_t> indices);

// Mean cross-entropy over the rows, evaluated batch by batch in the given order.
double mean_loss(const MLPParams& params, const TrainingData& data, std::span<const std::size_t> indices,
                 std::size_t batch_size);

// Mini-batch training with per-epoch reshuffling and early stopping on the
// monitored accuracy. Returns the best-epoch snapshot.
RunResult train(const ModelSpec& model, const LabeledSplit& split, const TrainingData& data,
                const OptimizerConfig& optimizer, const TrainConfig& cfg);

// JSON array with one {epoch, train_loss, train_acc, monitor_acc, test_acc}
// object per epoch.
std::string epoch_log_json(std::span<const EpochLog> logs);
std::vector<EpochLog> parse_epoch_log_json(std::string_view text);

}  // namespace loyalty

#include "loyalty/training.hpp"

#include <cmath>

#include <json.hpp>

#include "loyalty/error.hpp"
#include "loyalty/rng.hpp"

namespace loyalty {

Monitor parse_monitor(std::string_view name) {
  if (name == "validation") return Monitor::validation;
  if (name == "test") return Monitor::test;
  throw UsageError("unknown monitor '" + std::string(name) + "' (expected validation or test)");
}

std::string_view to_string(Monitor monitor) { return monitor == Monitor::validation ? "validation" : "test"; }

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (max_epochs < 1) throw UsageError("max_epochs must be at least 1");
  if (patience > max_epochs) throw UsageError("patience must not exceed max_epochs");
}

TrainingData build_training_data(const Dataset& dataset, const LabeledSplit& split,
                                 const EmbeddingMatrix* embeddings) {
  const std::size_t n = dataset.size();
  if (split.labels.size() != n) throw DataError("split does not belong to this dataset");
  TrainingData data;
  data.labels = split.labels;
  data.x2 = Matrix(n, dataset.schema.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = split.normalizer.apply(dataset.records[i].features);
    std::copy(z.begin(), z.end(), data.x2.row(i).begin());
  }
  if (embeddings) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (const auto& rec : dataset.records) ids.push_back(rec.id);
    data.x1 = align_to(*embeddings, ids).rows;
  }
  return data;
}

std::vector<std::size_t> batch_sizes(std::size_t n, std::size_t batch_size) {
  std::vector<std::size_t> out;
  for (std::size_t start = 0; start < n; start += batch_size) out.push_back(std::min(batch_size, n - start));
  return out;
}

std::size_t best_epoch(std::span<const EpochLog> logs) {
  if (logs.empty()) throw UsageError("best_epoch: no epochs logged");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logs.size(); ++i) {
    if (logs[i].monitor_acc > logs[best].monitor_acc) best = i;
  }
  return logs[best].epoch;
}

bool early_stop_check(std::span<const EpochLog> logs, std::size_t patience) {
  return logs.back().epoch - best_epoch(logs) >= patience;
}

namespace {

struct Batch {
  Matrix x1;
  Matrix x2;
  std::vector<int> labels;
};

Batch gather(const TrainingData& data, Modality modality, std::span<const std::size_t> rows) {
  Batch b;
  if (uses_text(modality)) b.x1 = gather_rows(data.x1, rows);
  if (uses_profile(modality)) b.x2 = gather_rows(data.x2, rows);
  b.labels.reserve(rows.size());
  for (auto r : rows) b.labels.push_back(data.labels[r]);
  return b;
}

}  // namespace

double evaluate(const MLPParams& params, const TrainingData& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("evaluate: empty evaluation set");
  const auto batch = gather(data, params.modality, indices);
  const auto trace = forward(params, batch.x1, batch.x2);
  return accuracy(predict(trace), batch.labels);
}

double mean_loss(const MLPParams& params, const TrainingData& data, std::span<const std::size_t> indices,
                 std::size_t batch_size) {
  if (indices.empty()) throw DataError("mean_loss: empty set");
  double total = 0.0;
  std::size_t start = 0;
  for (auto size : batch_sizes(indices.size(), batch_size)) {
    const auto batch = gather(data, params.modality, indices.subspan(start, size));
    total += loss(forward(params, batch.x1, batch.x2), batch.labels) * static_cast<double>(size);
    start += size;
  }
  return total / static_cast<double>(indices.size());
}

RunResult train(const ModelSpec& model, const LabeledSplit& split, const TrainingData& data,
                const OptimizerConfig& optimizer, const TrainConfig& cfg) {
  cfg.validate();
  optimizer.validate();
  if (split.train.empty()) throw DataError("train: empty training split");
  if (split.test.empty()) throw DataError("train: empty test split");
  const auto& monitored = cfg.monitor == Monitor::validation ? split.validation : split.test;
  if (monitored.empty()) throw UsageError("train: validation split is empty; use monitor=test or a validation fraction");
  if (uses_text(model.modality) && data.x1.rows != data.size()) {
    throw DataError("train: text features missing or not aligned with the labels");
  }
  if (uses_profile(model.modality) && data.x2.rows != data.size()) {
    throw DataError("train: profile features not aligned with the labels");
  }

  NetworkDims dims;
  dims.modality = model.modality;
  dims.d_text = data.x1.cols;
  dims.j_in = data.x2.cols;
  dims.x2_hidden = model.x2_hidden;
  dims.out_hidden = model.out_hidden;
  MLPParams params = init_params(dims, cfg.seed);
  OptimizerState state = make_state(params);
  Engine rng(derive_seed(cfg.seed, "shuffle"));

  RunResult result;
  result.params = params;
  std::vector<std::size_t> order = split.train;
  double best_monitor = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    double loss_sum = 0.0;
    std::size_t start = 0;
    std::size_t batch_index = 0;
    for (auto size : batch_sizes(order.size(), cfg.batch_size)) {
      const auto batch = gather(data, model.modality, std::span<const std::size_t>(order).subspan(start, size));
      const auto trace = forward(params, batch.x1, batch.x2);
      const double batch_loss = loss(trace, batch.labels);
      if (!std::isfinite(batch_loss)) {
        throw RuntimeFailure("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      try {
        step(state, params, backward(params, trace, batch.labels), optimizer);
      } catch (const RuntimeFailure& e) {
        throw RuntimeFailure(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      loss_sum += batch_loss * static_cast<double>(size);
      start += size;
      ++batch_index;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(order.size());
    log.train_acc = evaluate(params, data, split.train);
    log.monitor_acc = evaluate(params, data, monitored);
    log.test_acc = evaluate(params, data, split.test);
    result.logs.push_back(log);
    if (log.monitor_acc > best_monitor) {
      best_monitor = log.monitor_acc;
      result.params = params;
    }
    if (early_stop_check(result.logs, cfg.patience)) break;
  }

  result.epochs_run = result.logs.size();
  result.best_epoch = best_epoch(result.logs);
  const auto& best = result.logs[result.best_epoch - 1];
  result.train_acc = best.train_acc;
  result.monitor_acc = best.monitor_acc;
  result.test_acc = best.test_acc;
  return result;
}

std::string epoch_log_json(std::span<const EpochLog> logs) {
  auto out = nlohmann::json::array();
  for (const auto& l : logs) {
    out.push_back({{"epoch", l.epoch},
                   {"train_loss", l.train_loss},
                   {"train_acc", l.train_acc},
                   {"monitor_acc", l.monitor_acc},
                   {"test_acc", l.test_acc}});
  }
  return out.dump(2) + "\n";
}

std::vector<EpochLog> parse_epoch_log_json(std::string_view text) {
  std::vector<EpochLog> logs;
  try {
    for (const auto& item : nlohmann::json::parse(text)) {
      EpochLog l;
      l.epoch = item.at("epoch").get<std::size_t>();
      l.train_loss = item.at("train_loss").get<double>();
      l.train_acc = item.at("train_acc").get<double>();
      l.monitor_acc = item.at("monitor_acc").get<double>();
      l.test_acc = item.at("test_acc").get<double>();
      logs.push_back(l);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("epoch log: ") + e.what());
  }
  return logs;
}

}  // namespace loyalty

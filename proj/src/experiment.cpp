#include "loyalty/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <map>
#include <thread>

#include <omp.h>

#include "loyalty/error.hpp"
#include "loyalty/rng.hpp"

namespace loyalty {
namespace {

std::string sanitize(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    out.push_back(std::isalnum(c) || c == '.' || c == '_' || c == '-' ? static_cast<char>(std::tolower(c)) : '_');
  }
  return out;
}

std::optional<GroupAverage> average(const std::string& key, const std::vector<const CellResult*>& members) {
  if (members.empty()) return std::nullopt;
  GroupAverage g;
  g.key = key;
  g.cells = members.size();
  for (const auto* c : members) {
    g.train_acc += c->train_acc;
    g.test_acc += c->test_acc;
    g.epochs += static_cast<double>(c->best_epoch);
  }
  const auto n = static_cast<double>(members.size());
  g.train_acc /= n;
  g.test_acc /= n;
  g.epochs /= n;
  return g;
}

}  // namespace

void GridSpec::validate() const {
  if (optimizers.empty()) throw UsageError("grid: optimizer list is empty");
  if (modalities.empty()) throw UsageError("grid: modality list is empty");
  if (seeds.empty()) throw UsageError("grid: seed list is empty");
  const bool needs_text = std::any_of(modalities.begin(), modalities.end(), uses_text);
  if (needs_text && encoders.empty()) throw UsageError("grid: encoder list is empty");
  std::vector<std::string> names;
  for (const auto& e : encoders) {
    if (e.name.empty()) throw UsageError("grid: encoder without a name");
    if (e.name == kNoEncoder) throw UsageError("grid: encoder name 'None' is reserved");
    names.push_back(e.name);
  }
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) throw UsageError("grid: duplicate encoder name");
  train.validate();
}

std::vector<GridCell> enumerate_cells(const GridSpec& spec) {
  spec.validate();
  std::vector<GridCell> cells;
  auto add = [&](std::uint64_t seed, Modality modality, std::optional<std::size_t> encoder, OptimizerKind opt) {
    GridCell c;
    c.index = cells.size();
    c.modality = modality;
    c.encoder = encoder;
    c.optimizer = opt;
    c.seed = seed;
    const std::string enc = encoder ? spec.encoders[*encoder].name : std::string(kNoEncoder);
    c.id = sanitize(std::string(to_string(modality)) + "-" + enc + "-" + std::string(to_string(opt)) + "-s" +
                    std::to_string(seed));
    cells.push_back(std::move(c));
  };
  for (auto seed : spec.seeds) {
    for (auto modality : spec.modalities) {
      if (!uses_text(modality)) {
        for (auto opt : spec.optimizers) add(seed, modality, std::nullopt, opt);
        continue;
      }
      for (std::size_t e = 0; e < spec.encoders.size(); ++e) {
        for (auto opt : spec.optimizers) add(seed, modality, e, opt);
      }
    }
  }
  return cells;
}

std::size_t modality_slot(Modality modality) { return static_cast<std::size_t>(modality); }

bool better_cell(const CellResult& a, const CellResult& b) {
  if (a.test_acc != b.test_acc) return a.test_acc > b.test_acc;
  if (a.best_epoch != b.best_epoch) return a.best_epoch < b.best_epoch;
  return a.id < b.id;
}

GridReport summarize(std::vector<CellResult> cells) {
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  GridReport report;
  report.cells = std::move(cells);

  std::vector<std::string> encoder_order;
  std::vector<std::string> optimizer_order;
  std::vector<std::string> modality_order;
  auto note = [](std::vector<std::string>& order, const std::string& key) {
    if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
  };
  for (const auto& c : report.cells) {
    note(encoder_order, c.encoder);
    note(optimizer_order, std::string(to_string(c.optimizer)));
    note(modality_order, std::string(to_string(c.modality)));
  }
  // The profile-only row goes last, as in the Result-I layout.
  std::stable_partition(encoder_order.begin(), encoder_order.end(),
                        [](const std::string& e) { return e != kNoEncoder; });

  for (const auto& enc : encoder_order) report.result1.push_back(ResultRow{enc, {}});

  std::map<std::string, std::vector<const CellResult*>> by_opt;
  std::map<std::string, std::vector<const CellResult*>> by_mod;
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto& c = report.cells[i];
    if (!c.ok) {
      ++report.failed;
      continue;
    }
    by_opt[std::string(to_string(c.optimizer))].push_back(&c);
    by_mod[std::string(to_string(c.modality))].push_back(&c);

    const auto slot = modality_slot(c.modality);
    auto row = std::find_if(report.result1.begin(), report.result1.end(),
                            [&](const ResultRow& r) { return r.encoder == c.encoder; });
    auto& entry = row->by_modality[slot];
    if (!entry || better_cell(c, report.cells[entry->cell])) entry = ResultEntry{i, c.train_acc, c.test_acc, c.best_epoch};

    auto& best = report.best_per_modality[slot];
    if (!best || better_cell(c, report.cells[*best])) best = i;
  }
  for (const auto& key : optimizer_order) {
    if (auto g = average(key, by_opt[key])) report.by_optimizer.push_back(*g);
  }
  for (const auto& key : modality_order) {
    if (auto g = average(key, by_mod[key])) report.by_modality.push_back(*g);
  }
  return report;
}

std::vector<std::string> encoder_texts(const Dataset& dataset, const PreprocessConfig& preprocess) {
  preprocess.validate();
  std::vector<std::string> texts;
  texts.reserve(dataset.size());
  for (const auto& rec : dataset.records) {
    texts.push_back(truncate_code_points(clean_text(rec.text, preprocess), preprocess.len_max));
  }
  return texts;
}

EmbeddingMatrix compute_embeddings(const EncoderSpec& encoder, const std::vector<std::string>& ids,
                                   const std::vector<std::string>& texts, std::size_t len_max) {
  auto cfg = encoder.config;
  cfg.len_max = len_max;
  switch (cfg.provider) {
    case EmbeddingProvider::stub: return embed_stub(ids, texts, cfg);
    case EmbeddingProvider::service: return embed_via_service(ids, texts, cfg, encoder.endpoint);
    case EmbeddingProvider::file: return align_to(load_embeddings(encoder.path), ids);
  }
  throw UsageError("unknown embedding provider");
}

ExperimentInputs prepare_inputs(const Dataset& dataset, const SplitOptions& split_options,
                                const std::vector<EncoderSpec>& encoders, const PreprocessConfig& preprocess) {
  ExperimentInputs inputs;
  inputs.split = split(dataset, split_options);
  inputs.data = build_training_data(dataset, inputs.split, nullptr);
  if (encoders.empty()) return inputs;
  std::vector<std::string> ids;
  for (const auto& rec : dataset.records) ids.push_back(rec.id);
  const auto texts = encoder_texts(dataset, preprocess);
  for (const auto& enc : encoders) inputs.encoders.push_back(compute_embeddings(enc, ids, texts, preprocess.len_max));
  return inputs;
}

std::vector<CellResult> run_cells(const GridSpec& spec, const ExperimentInputs& inputs, std::size_t workers) {
  const auto cells = enumerate_cells(spec);
  if (inputs.encoders.size() != spec.encoders.size()) {
    throw UsageError("grid: embeddings prepared for a different encoder list");
  }
  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(cells.size(), 1));

  auto run_one = [&](const GridCell& cell) {
    CellResult r;
    r.index = cell.index;
    r.id = cell.id;
    r.encoder = cell.encoder ? spec.encoders[*cell.encoder].name : std::string(kNoEncoder);
    r.modality = cell.modality;
    r.optimizer = cell.optimizer;
    r.seed = cell.seed;
    try {
      TrainingData data;
      data.labels = inputs.data.labels;
      data.x2 = inputs.data.x2;
      if (cell.encoder) data.x1 = inputs.encoders[*cell.encoder].rows;
      ModelSpec model = spec.network;
      model.modality = cell.modality;
      TrainConfig train_cfg = spec.train;
      train_cfg.seed = derive_seed(cell.seed, cell.id);
      const auto run = train(model, inputs.split, data, default_config(cell.optimizer), train_cfg);
      r.ok = true;
      r.train_acc = run.train_acc;
      r.test_acc = run.test_acc;
      r.best_epoch = run.best_epoch;
      r.epochs_run = run.epochs_run;
      r.logs = run.logs;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
    return r;
  };

  auto worker = [&] {
    // Parallelism comes from the pool; kernels stay single-threaded inside it.
    if (workers > 1) omp_set_num_threads(1);
    for (std::size_t i = next++; i < cells.size(); i = next++) results[i] = run_one(cells[i]);
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return results;
}

GridReport run_grid(const GridSpec& spec, const ExperimentInputs& inputs, std::size_t workers) {
  return summarize(run_cells(spec, inputs, workers));
}

}  // namespace loyalty

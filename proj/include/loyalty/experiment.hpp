#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loyalty/data_model.hpp"
#include "loyalty/embeddings.hpp"
#include "loyalty/optim.hpp"
#include "loyalty/text_preprocess.hpp"
#include "loyalty/training.hpp"

namespace loyalty {

// One text encoder on the grid's encoder axis.
struct EncoderSpec {
  std::string name;
  EmbeddingConfig config;
  std::string path;      // provider = file
  std::string endpoint;  // provider = service
};

struct GridSpec {
  std::vector<EncoderSpec> encoders;
  std::vector<OptimizerKind> optimizers;
  std::vector<Modality> modalities;
  std::vector<std::uint64_t> seeds;
  TrainConfig train;
  ModelSpec network;  // modality field unused

  // Throws UsageError on an empty axis (encoders may be empty only when the
  // grid is X2-only).
  void validate() const;
};

struct GridCell {
  std::size_t index = 0;
  std::string id;
  Modality modality = Modality::Both;
  std::optional<std::size_t> encoder;  // empty for X2
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
};

// Order: seed, then modality, then encoder (skipped for X2), then optimizer.
std::vector<GridCell> enumerate_cells(const GridSpec& spec);

inline constexpr std::string_view kNoEncoder = "None";

struct CellResult {
  std::size_t index = 0;
  std::string id;
  std::string encoder;  // kNoEncoder for X2 cells
  Modality modality = Modality::Both;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::vector<EpochLog> logs;

  friend bool operator==(const CellResult&, const CellResult&) = default;
};

// Best run for one (encoder, modality) pair of the Result-I table.
struct ResultEntry {
  std::size_t cell = 0;  // index into GridReport::cells
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::size_t epochs = 0;
};

struct ResultRow {
  std::string encoder;
  std::array<std::optional<ResultEntry>, 3> by_modality;  // Both, X1, X2
};

struct GroupAverage {
  std::string key;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double epochs = 0.0;
  std::size_t cells = 0;
};

struct GridReport {
  std::vector<CellResult> cells;  // in cell-index order
  std::vector<ResultRow> result1;
  std::vector<GroupAverage> by_optimizer;
  std::vector<GroupAverage> by_modality;
  std::array<std::optional<std::size_t>, 3> best_per_modality;  // cell positions
  std::size_t failed = 0;
};

std::size_t modality_slot(Modality modality);

// "Best" is the highest test accuracy, then fewer epochs, then the smaller
// cell id. Returns true when a beats b.
bool better_cell(const CellResult& a, const CellResult& b);

// Pure aggregation. Failed cells are excluded from every table and counted.
// Row and group order follow first appearance in cell-index order.
GridReport summarize(std::vector<CellResult> cells);

// Frozen inputs shared by every cell.
struct ExperimentInputs {
  LabeledSplit split;
  TrainingData data;                     // x2 and labels; x1 unused
  std::vector<EmbeddingMatrix> encoders;  // per GridSpec::encoders, aligned to the dataset
};

// Cleans and caps the review texts, splits the dataset and computes one
// embedding matrix per encoder.
ExperimentInputs prepare_inputs(const Dataset& dataset, const SplitOptions& split_options,
                                const std::vector<EncoderSpec>& encoders, const PreprocessConfig& preprocess);

// The texts exactly as the encoders see them.
std::vector<std::string> encoder_texts(const Dataset& dataset, const PreprocessConfig& preprocess);

EmbeddingMatrix compute_embeddings(const EncoderSpec& encoder, const std::vector<std::string>& ids,
                                   const std::vector<std::string>& texts, std::size_t len_max);

// Runs every cell on a pool of `workers` threads. Results are placed by cell
// index, so any worker count yields the same report. A failing cell is
// recorded, not rethrown.
std::vector<CellResult> run_cells(const GridSpec& spec, const ExperimentInputs& inputs, std::size_t workers);

GridReport run_grid(const GridSpec& spec, const ExperimentInputs& inputs, std::size_t workers);

}  // namespace loyalty

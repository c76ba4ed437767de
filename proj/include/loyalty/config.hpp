#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loyalty/data_model.hpp"
#include "loyalty/experiment.hpp"
#include "loyalty/synthetic.hpp"
#include "loyalty/text_preprocess.hpp"

namespace loyalty {

// Environment variable holding the default embedding service endpoint.
inline constexpr const char* kEndpointEnv = "LOYALTY_EMBED_ENDPOINT";

std::string default_endpoint();

// Parsed experiment config. See README.md for the document grammar.
struct ExperimentConfig {
  std::optional<std::filesystem::path> csv_path;
  std::vector<std::string> schema;
  std::optional<SyntheticSpec> synthetic;
  SplitOptions split;
  PreprocessConfig preprocess;
  GridSpec grid;
  std::optional<std::filesystem::path> output_dir;
};

// Relative paths resolve against base_dir. Throws UsageError on unknown
// keys, wrong types or invalid values.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// The dataset named by the config: loaded from CSV or generated.
Dataset load_config_dataset(const ExperimentConfig& config);

}  // namespace loyalty

#include "loyalty/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "loyalty/error.hpp"

namespace loyalty {
namespace {

using nlohmann::json;

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw UsageError("config: '" + std::string(where) + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw UsageError("config: unknown key '" + key + "' in '" + std::string(where) + "'");
    }
  }
}

template <typename T>
T get(const json& obj, std::string_view key, T fallback) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: key '" + std::string(key) + "' has the wrong type");
  }
}

EncoderSpec parse_encoder(const json& e) {
  check_keys(e, "encoders[]", {"name", "provider", "d_text", "seed", "model", "path", "endpoint"});
  EncoderSpec spec;
  spec.config.provider = parse_provider(get<std::string>(e, "provider", "stub"));
  spec.config.d_text = get<std::size_t>(e, "d_text", 200);
  spec.config.seed = get<std::uint64_t>(e, "seed", 0);
  spec.config.model_name = get<std::string>(e, "model", "");
  spec.path = get<std::string>(e, "path", "");
  spec.endpoint = get<std::string>(e, "endpoint", default_endpoint());
  switch (spec.config.provider) {
    case EmbeddingProvider::stub:
      if (spec.config.d_text == 0) throw UsageError("config: stub encoder needs d_text > 0");
      spec.name = get<std::string>(e, "name", stub_fingerprint(spec.config));
      break;
    case EmbeddingProvider::service:
      spec.config.model_name = normalize_model_name(spec.config.model_name);
      if (spec.endpoint.empty()) {
        throw UsageError("config: service encoder needs an endpoint (or " + std::string(kEndpointEnv) + ")");
      }
      spec.name = get<std::string>(e, "name", spec.config.model_name);
      break;
    case EmbeddingProvider::file:
      if (spec.path.empty()) throw UsageError("config: file encoder needs a path");
      spec.name = get<std::string>(e, "name", spec.path);
      break;
  }
  return spec;
}

}  // namespace

std::string default_endpoint() {
  const char* env = std::getenv(kEndpointEnv);
  return env ? env : "";
}

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  check_keys(doc, "<root>",
             {"data", "split", "preprocess", "encoders", "optimizers", "modalities", "seeds", "train", "network",
              "output_dir"});
  ExperimentConfig cfg;

  const auto data = doc.value("data", json::object());
  check_keys(data, "data", {"csv", "schema", "synthetic"});
  if (data.contains("csv") == data.contains("synthetic")) {
    throw UsageError("config: 'data' needs exactly one of 'csv' or 'synthetic'");
  }
  if (data.contains("csv")) {
    cfg.csv_path = base_dir / get<std::string>(data, "csv", "");
    cfg.schema = get<std::vector<std::string>>(data, "schema", {});
  } else {
    const auto& s = data["synthetic"];
    check_keys(s, "data.synthetic", {"n", "j_in", "text_weight", "tabular_weight", "noise", "seed"});
    SyntheticSpec spec;
    spec.n = get<std::size_t>(s, "n", spec.n);
    spec.j_in = get<std::size_t>(s, "j_in", spec.j_in);
    spec.text_weight = get<double>(s, "text_weight", spec.text_weight);
    spec.tabular_weight = get<double>(s, "tabular_weight", spec.tabular_weight);
    spec.noise = get<double>(s, "noise", spec.noise);
    spec.seed = get<std::uint64_t>(s, "seed", spec.seed);
    spec.validate();
    cfg.synthetic = spec;
  }

  const auto split = doc.value("split", json::object());
  check_keys(split, "split", {"test_fraction", "val_fraction", "seed", "stratified"});
  cfg.split.test_fraction = get<double>(split, "test_fraction", cfg.split.test_fraction);
  cfg.split.val_fraction_of_train = get<double>(split, "val_fraction", cfg.split.val_fraction_of_train);
  cfg.split.seed = get<std::uint64_t>(split, "seed", cfg.split.seed);
  cfg.split.stratified = get<bool>(split, "stratified", cfg.split.stratified);

  const auto pre = doc.value("preprocess", json::object());
  check_keys(pre, "preprocess", {"len_max"});
  cfg.preprocess.len_max = get<std::size_t>(pre, "len_max", cfg.preprocess.len_max);
  cfg.preprocess.validate();

  for (const auto& e : doc.value("encoders", json::array())) {
    auto spec = parse_encoder(e);
    if (spec.config.provider == EmbeddingProvider::file) spec.path = (base_dir / spec.path).string();
    cfg.grid.encoders.push_back(std::move(spec));
  }
  for (const auto& o : get<std::vector<std::string>>(doc, "optimizers", {"adam", "adamax", "nadam"})) {
    cfg.grid.optimizers.push_back(parse_optimizer(o));
  }
  for (const auto& m : get<std::vector<std::string>>(doc, "modalities", {"Both", "X1", "X2"})) {
    cfg.grid.modalities.push_back(parse_modality(m));
  }
  cfg.grid.seeds = get<std::vector<std::uint64_t>>(doc, "seeds", {0});

  const auto train = doc.value("train", json::object());
  check_keys(train, "train", {"batch_size", "max_epochs", "patience", "monitor"});
  cfg.grid.train.batch_size = get<std::size_t>(train, "batch_size", cfg.grid.train.batch_size);
  cfg.grid.train.max_epochs = get<std::size_t>(train, "max_epochs", cfg.grid.train.max_epochs);
  cfg.grid.train.patience = get<std::size_t>(train, "patience", cfg.grid.train.patience);
  cfg.grid.train.monitor = parse_monitor(get<std::string>(train, "monitor", "validation"));

  const auto network = doc.value("network", json::object());
  check_keys(network, "network", {"x2_hidden", "out_hidden"});
  cfg.grid.network.x2_hidden = get<std::vector<std::size_t>>(network, "x2_hidden", cfg.grid.network.x2_hidden);
  cfg.grid.network.out_hidden = get<std::vector<std::size_t>>(network, "out_hidden", cfg.grid.network.out_hidden);

  if (doc.contains("output_dir")) cfg.output_dir = base_dir / get<std::string>(doc, "output_dir", "");
  cfg.grid.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str(), path.parent_path());
}

Dataset load_config_dataset(const ExperimentConfig& config) {
  if (config.synthetic) return generate_synthetic(*config.synthetic).dataset;
  return load_csv(config.csv_path->string(), config.schema);
}

}  // namespace loyalty

// Command-line front end: preprocess, embed, synth, train, grid, report.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "loyalty/config.hpp"
#include "loyalty/csv.hpp"
#include "loyalty/data_model.hpp"
#include "loyalty/embeddings.hpp"
#include "loyalty/error.hpp"
#include "loyalty/experiment.hpp"
#include "loyalty/report.hpp"
#include "loyalty/synthetic.hpp"
#include "loyalty/text_preprocess.hpp"
#include "loyalty/training.hpp"

namespace fs = std::filesystem;
using namespace loyalty;

namespace {

std::size_t column_index(const csv::Row& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("csv header row: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

// Non-blank rows after the header, each checked for the header's width.
std::vector<csv::Row> data_rows(const std::vector<csv::Row>& rows) {
  std::vector<csv::Row> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() == 1 && rows[r][0].empty()) continue;
    if (rows[r].size() != rows[0].size()) {
      throw DataError("row " + std::to_string(out.size() + 1) + ": expected " + std::to_string(rows[0].size()) +
                      " fields, got " + std::to_string(rows[r].size()));
    }
    out.push_back(rows[r]);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw RuntimeFailure("write failed for '" + path.string() + "'");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create '" + dir.string() + "': " + ec.message());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct PreprocessArgs {
  std::string in, out;
  std::size_t len_max = 200;
};

void run_preprocess(const PreprocessArgs& args) {
  PreprocessConfig cfg;
  cfg.len_max = args.len_max;
  cfg.validate();
  const auto rows = csv::read_file(args.in);
  if (rows.empty()) throw DataError("csv: missing header row");
  const auto text_col = column_index(rows[0], "text");
  std::ostringstream out;
  csv::write_row(out, rows[0]);
  for (auto row : data_rows(rows)) {
    row[text_col] = truncate_code_points(clean_text(row[text_col], cfg), cfg.len_max);
    csv::write_row(out, row);
  }
  write_text(args.out, out.str());
}

struct EncoderArgs {
  std::string provider = "stub";
  std::string endpoint = default_endpoint();
  std::string model;
  std::string source;  // file provider
  std::size_t d_text = 200;
  std::uint64_t seed = 0;
  std::size_t len_max = 200;

  EncoderSpec spec() const {
    EncoderSpec e;
    e.config.provider = parse_provider(provider);
    e.config.d_text = d_text;
    e.config.seed = seed;
    e.config.len_max = len_max;
    e.endpoint = endpoint;
    e.path = source;
    if (e.config.provider == EmbeddingProvider::service) e.config.model_name = normalize_model_name(model);
    if (e.config.provider == EmbeddingProvider::file && source.empty()) {
      throw UsageError("--provider file needs --source <embedding file>");
    }
    if (e.config.provider == EmbeddingProvider::service && endpoint.empty()) {
      throw UsageError("--provider service needs --endpoint or " + std::string(kEndpointEnv));
    }
    if (d_text == 0) throw UsageError("--d-text must be positive");
    return e;
  }
};

void add_encoder_flags(CLI::App* cmd, EncoderArgs& args) {
  cmd->add_option("--provider", args.provider, "stub, service or file")->capture_default_str();
  cmd->add_option("--endpoint", args.endpoint, "Embedding service base URL");
  cmd->add_option("--model", args.model, "Checkpoint name (service provider)");
  cmd->add_option("--source", args.source, "Precomputed embedding file (file provider)");
  cmd->add_option("--d-text", args.d_text, "Stub output width")->capture_default_str();
  cmd->add_option("--encoder-seed", args.seed, "Stub hashing seed")->capture_default_str();
  cmd->add_option("--len-max", args.len_max, "Token cap (<= 512)")->capture_default_str();
}

struct EmbedArgs {
  std::string in, out;
  EncoderArgs encoder;
};

void run_embed(const EmbedArgs& args) {
  PreprocessConfig pre;
  pre.len_max = args.encoder.len_max;
  pre.validate();
  const auto encoder = args.encoder.spec();
  const auto rows = csv::read_file(args.in);
  if (rows.empty()) throw DataError("csv: missing header row");
  const auto id_col = column_index(rows[0], "id");
  const auto text_col = column_index(rows[0], "text");
  std::vector<std::string> ids, texts;
  for (const auto& row : data_rows(rows)) {
    ids.push_back(row[id_col]);
    texts.push_back(truncate_code_points(clean_text(row[text_col], pre), pre.len_max));
  }
  const auto matrix = compute_embeddings(encoder, ids, texts, pre.len_max);
  save_embeddings(matrix, args.out);
  std::cout << "wrote " << matrix.rows.rows << " x " << matrix.rows.cols << " embeddings (" << matrix.fingerprint
            << ") to " << args.out << "\n";
}

struct SynthArgs {
  std::string out;
  SyntheticSpec spec;
};

void run_synth(const SynthArgs& args) {
  const auto data = generate_synthetic(args.spec);
  make_dir(args.out);
  write_csv((fs::path(args.out) / "data.csv").string(), data.dataset);
  const nlohmann::json bayes = {
      {"text_only", data.bayes.text_only},
      {"tabular_only", data.bayes.tabular_only},
      {"combined", data.bayes.combined},
      {"class_prior", data.bayes.class_prior},
      {"schema", data.dataset.schema},
  };
  write_text(fs::path(args.out) / "bayes.json", bayes.dump(2) + "\n");
  std::cout << "wrote " << data.dataset.size() << " records; Bayes accuracy text " << data.bayes.text_only
            << ", tabular " << data.bayes.tabular_only << ", combined " << data.bayes.combined << "\n";
}

struct TrainArgs {
  std::string data, schema, out;
  std::string modality = "Both";
  std::string optimizer = "adam";
  std::string monitor = "validation";
  std::size_t batch_size = 64, max_epochs = 200, patience = 50;
  std::uint64_t seed = 0;
  double test_fraction = 0.25, val_fraction = 0.15;
  std::uint64_t split_seed = 0;
  bool stratified = true;
  EncoderArgs encoder;
};

void run_train(const TrainArgs& args) {
  TrainConfig cfg;
  cfg.batch_size = args.batch_size;
  cfg.max_epochs = args.max_epochs;
  cfg.patience = args.patience;
  cfg.monitor = parse_monitor(args.monitor);
  cfg.seed = args.seed;
  cfg.validate();
  ModelSpec model;
  model.modality = parse_modality(args.modality);
  const auto optimizer = default_config(parse_optimizer(args.optimizer));
  PreprocessConfig pre;
  pre.len_max = args.encoder.len_max;
  pre.validate();
  std::optional<EncoderSpec> encoder;
  if (uses_text(model.modality)) encoder = args.encoder.spec();

  const auto dataset = load_csv(args.data, split_list(args.schema));
  SplitOptions split_options;
  split_options.test_fraction = args.test_fraction;
  split_options.val_fraction_of_train = args.val_fraction;
  split_options.seed = args.split_seed;
  split_options.stratified = args.stratified;
  const auto inputs = prepare_inputs(dataset, split_options,
                                     encoder ? std::vector<EncoderSpec>{*encoder} : std::vector<EncoderSpec>{}, pre);
  auto data = inputs.data;
  if (encoder) data.x1 = inputs.encoders.front().rows;

  const auto result = train(model, inputs.split, data, optimizer, cfg);
  make_dir(args.out);
  write_text(fs::path(args.out) / "log.json", epoch_log_json(result.logs));
  save_params(result.params, (fs::path(args.out) / "model.mlp").string());
  const nlohmann::json summary = {
      {"modality", std::string(to_string(model.modality))},
      {"optimizer", std::string(to_string(optimizer.kind))},
      {"encoder", encoder ? inputs.encoders.front().fingerprint : std::string(kNoEncoder)},
      {"train_acc", result.train_acc},
      {"monitor_acc", result.monitor_acc},
      {"test_acc", result.test_acc},
      {"best_epoch", result.best_epoch},
      {"epochs_run", result.epochs_run},
  };
  write_text(fs::path(args.out) / "summary.json", summary.dump(2) + "\n");
  std::cout << "best epoch " << result.best_epoch << " of " << result.epochs_run << ": train "
            << result.train_acc << ", test " << result.test_acc << "\n";
}

void print_best(const GridReport& report) {
  for (auto m : {Modality::Both, Modality::X1, Modality::X2}) {
    const auto& best = report.best_per_modality[modality_slot(m)];
    if (!best) continue;
    const auto& c = report.cells[*best];
    std::cout << "best " << to_string(m) << ": " << c.id << " train " << c.train_acc << " test " << c.test_acc
              << " epochs " << c.best_epoch << "\n";
  }
}

struct GridArgs {
  std::string config, out;
  std::size_t workers = 1;
};

void run_grid_command(const GridArgs& args) {
  const auto cfg = load_experiment_config(args.config);
  fs::path out_dir;
  if (!args.out.empty()) {
    out_dir = args.out;
  } else if (cfg.output_dir) {
    out_dir = *cfg.output_dir;
  } else {
    throw UsageError("grid: no output directory (--out or output_dir)");
  }
  if (args.workers < 1) throw UsageError("--workers must be at least 1");
  const auto dataset = load_config_dataset(cfg);
  const auto inputs = prepare_inputs(dataset, cfg.split, cfg.grid.encoders, cfg.preprocess);
  const auto report = run_grid(cfg.grid, inputs, args.workers);
  make_dir(out_dir);
  write_run_outputs(report, out_dir);
  emit_report(report, ReportFormat::markdown, out_dir);
  emit_report(report, ReportFormat::csv, out_dir);
  std::cout << report.cells.size() << " runs, " << report.failed << " failed; report in " << out_dir.string()
            << "\n";
  print_best(report);
  if (!report.cells.empty() && report.failed == report.cells.size()) {
    throw RuntimeFailure("all grid cells failed; first error: " + report.cells.front().error);
  }
}

struct ReportArgs {
  std::string in, out;
  std::string format = "all";
};

void run_report(const ReportArgs& args) {
  const auto report = summarize(read_run_outputs(args.in));
  if (args.format == "all") {
    emit_report(report, ReportFormat::markdown, args.out);
    emit_report(report, ReportFormat::csv, args.out);
  } else {
    emit_report(report, parse_report_format(args.format), args.out);
  }
  print_best(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal loyalty classifier: review text + profile features"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Clean the text column of a CSV");
  pre_cmd->add_option("--in", pre.in, "Input CSV")->required();
  pre_cmd->add_option("--out", pre.out, "Output CSV")->required();
  pre_cmd->add_option("--len-max", pre.len_max, "Length cap in code points (<= 512)")->capture_default_str();

  EmbedArgs embed;
  auto* embed_cmd = app.add_subcommand("embed", "Compute frozen text embeddings for a CSV");
  embed_cmd->add_option("--in", embed.in, "Input CSV with id and text columns")->required();
  embed_cmd->add_option("--out", embed.out, "Output embedding file")->required();
  add_encoder_flags(embed_cmd, embed.encoder);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic review + profile dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory (data.csv, bayes.json)")->required();
  synth_cmd->add_option("--n", synth.spec.n, "Record count")->capture_default_str();
  synth_cmd->add_option("--j-in", synth.spec.j_in, "Profile feature count")->capture_default_str();
  synth_cmd->add_option("--text-weight", synth.spec.text_weight, "Text signal weight")->capture_default_str();
  synth_cmd->add_option("--tabular-weight", synth.spec.tabular_weight, "Tabular signal weight")->capture_default_str();
  synth_cmd->add_option("--noise", synth.spec.noise, "Label noise sigma")->capture_default_str();
  synth_cmd->add_option("--seed", synth.spec.seed, "Generator seed")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a single model");
  train_cmd->add_option("--data", tr.data, "Dataset CSV")->required();
  train_cmd->add_option("--schema", tr.schema, "Comma-separated profile feature columns");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--modality", tr.modality, "Both, X1 or X2")->capture_default_str();
  train_cmd->add_option("--optimizer", tr.optimizer, "adam, adamax or nadam")->capture_default_str();
  train_cmd->add_option("--monitor", tr.monitor, "validation or test")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch_size)->capture_default_str();
  train_cmd->add_option("--max-epochs", tr.max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", tr.patience)->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Initialisation / shuffling seed")->capture_default_str();
  train_cmd->add_option("--test-fraction", tr.test_fraction)->capture_default_str();
  train_cmd->add_option("--val-fraction", tr.val_fraction)->capture_default_str();
  train_cmd->add_option("--split-seed", tr.split_seed)->capture_default_str();
  train_cmd->add_option("--stratified", tr.stratified)->capture_default_str();
  add_encoder_flags(train_cmd, tr.encoder);

  GridArgs grid;
  auto* grid_cmd = app.add_subcommand("grid", "Run the encoder x optimizer x modality grid");
  grid_cmd->add_option("--config", grid.config, "Experiment config (JSON)")->required();
  grid_cmd->add_option("--workers", grid.workers, "Parallel runs")->capture_default_str();
  grid_cmd->add_option("--out", grid.out, "Output directory (overrides output_dir)");

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Re-emit report tables from a grid output directory");
  report_cmd->add_option("--in", rep.in, "Grid output directory")->required();
  report_cmd->add_option("--out", rep.out, "Report directory")->required();
  report_cmd->add_option("--format", rep.format, "markdown, csv or all")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (pre_cmd->parsed()) run_preprocess(pre);
    if (embed_cmd->parsed()) run_embed(embed);
    if (synth_cmd->parsed()) run_synth(synth);
    if (train_cmd->parsed()) run_train(tr);
    if (grid_cmd->parsed()) run_grid_command(grid);
    if (report_cmd->parsed()) run_report(rep);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

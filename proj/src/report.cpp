#include "loyalty/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "loyalty/csv.hpp"
#include "loyalty/error.hpp"
#include "loyalty/format.hpp"

namespace loyalty {
namespace {

constexpr std::array<Modality, 3> kModalities = {Modality::Both, Modality::X1, Modality::X2};
constexpr std::array<std::string_view, 3> kSlotNames = {"both", "x1", "x2"};

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string bold_if(bool flag, std::string text) { return flag ? "**" + text + "**" : text; }

// Table-wide extremes used for bold flags.
struct Extremes {
  double train = -std::numeric_limits<double>::infinity();
  double test = -std::numeric_limits<double>::infinity();
  double epochs = std::numeric_limits<double>::infinity();

  void add(double tr, double te, double ep) {
    train = std::max(train, tr);
    test = std::max(test, te);
    epochs = std::min(epochs, ep);
  }
};

Extremes result1_extremes(const GridReport& report) {
  Extremes x;
  for (const auto& row : report.result1) {
    for (const auto& e : row.by_modality) {
      if (e) x.add(e->train_acc, e->test_acc, static_cast<double>(e->epochs));
    }
  }
  return x;
}

Extremes group_extremes(const std::vector<GroupAverage>& groups) {
  Extremes x;
  for (const auto& g : groups) x.add(g.train_acc, g.test_acc, g.epochs);
  return x;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw RuntimeFailure("write failed for '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void group_table(std::ostringstream& md, const std::vector<GroupAverage>& groups, std::string_view key_name) {
  const auto x = group_extremes(groups);
  md << "| " << key_name << " | Train | Test | Epochs | Cells |\n";
  md << "|---|---:|---:|---:|---:|\n";
  for (const auto& g : groups) {
    md << "| " << g.key << " | " << bold_if(g.train_acc == x.train, fixed(g.train_acc, 3)) << " | "
       << bold_if(g.test_acc == x.test, fixed(g.test_acc, 3)) << " | "
       << bold_if(g.epochs == x.epochs, fixed(g.epochs, 1)) << " | " << g.cells << " |\n";
  }
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  if (name == "csv") return ReportFormat::csv;
  throw UsageError("unknown report format '" + std::string(name) + "' (expected markdown or csv)");
}

std::string render_markdown(const GridReport& report) {
  std::ostringstream md;
  md << "# Grid search report\n\n";

  md << "## Result I (Accuracy in Train and Test Data)\n\n";
  md << "Best run per encoder and modality (highest test accuracy, then fewest epochs).\n\n";
  md << "| Encoder / Modality | Train Both | Train X1 | Train X2 | Test Both | Test X1 | Test X2 "
        "| Epochs Both | Epochs X1 | Epochs X2 |\n";
  md << "|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  const auto x = result1_extremes(report);
  for (const auto& row : report.result1) {
    md << "| " << row.encoder;
    for (const auto& e : row.by_modality) md << " | " << (e ? bold_if(e->train_acc == x.train, fixed(e->train_acc, 3)) : "-");
    for (const auto& e : row.by_modality) md << " | " << (e ? bold_if(e->test_acc == x.test, fixed(e->test_acc, 3)) : "-");
    for (const auto& e : row.by_modality) {
      md << " | " << (e ? bold_if(static_cast<double>(e->epochs) == x.epochs, std::to_string(e->epochs)) : "-");
    }
    md << " |\n";
  }
  md << "\nBold: best train accuracy, best test accuracy and fewest epochs in the table. "
        "Epochs is the best (restored) epoch.\n\n";

  md << "## Result II (Group Average)\n\n";
  group_table(md, report.by_optimizer, "Optimizer");
  md << "\n";
  group_table(md, report.by_modality, "Modality");
  md << "\nEach optimizer row averages every successful run with that optimizer across encoders, "
        "modalities and seeds; each modality row averages every successful run with that modality "
        "across encoders, optimizers and seeds.\n";
  md << "Failed runs excluded from the averages: " << report.failed << ".\n\n";

  md << "## Best run per modality\n\n";
  md << "| Modality | Run | Encoder | Optimizer | Train | Test | Epochs |\n";
  md << "|---|---|---|---|---:|---:|---:|\n";
  for (auto m : kModalities) {
    const auto& best = report.best_per_modality[modality_slot(m)];
    if (!best) continue;
    const auto& c = report.cells[*best];
    md << "| " << to_string(m) << " | " << c.id << " | " << c.encoder << " | " << to_string(c.optimizer) << " | "
       << fixed(c.train_acc, 3) << " | " << fixed(c.test_acc, 3) << " | " << c.best_epoch << " |\n";
  }

  md << "\n## Runs\n\n";
  md << "| Run | Modality | Encoder | Optimizer | Seed | Train | Test | Best epoch | Epochs run | Status |\n";
  md << "|---|---|---|---|---:|---:|---:|---:|---:|---|\n";
  for (const auto& c : report.cells) {
    md << "| " << c.id << " | " << to_string(c.modality) << " | " << c.encoder << " | " << to_string(c.optimizer)
       << " | " << c.seed << " | ";
    if (c.ok) {
      md << fixed(c.train_acc, 3) << " | " << fixed(c.test_acc, 3) << " | " << c.best_epoch << " | "
         << c.epochs_run << " | ok |\n";
    } else {
      std::string reason = c.error;
      std::replace(reason.begin(), reason.end(), '|', '/');
      std::replace(reason.begin(), reason.end(), '\n', ' ');
      md << "- | - | - | - | failed: " << reason << " |\n";
    }
  }
  return md.str();
}

std::string render_result1_csv(const GridReport& report) {
  std::ostringstream out;
  csv::Row header{"encoder"};
  for (std::string_view group : {"train", "test", "epochs"}) {
    for (auto slot : kSlotNames) header.push_back(std::string(group) + "_" + std::string(slot));
  }
  header.push_back("best");
  csv::write_row(out, header);
  const auto x = result1_extremes(report);
  for (const auto& row : report.result1) {
    csv::Row line{row.encoder};
    std::vector<std::string> flags;
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& e = row.by_modality[s];
      line.push_back(e ? format_double(e->train_acc) : "");
      if (e && e->train_acc == x.train) flags.push_back("train_" + std::string(kSlotNames[s]));
    }
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& e = row.by_modality[s];
      line.push_back(e ? format_double(e->test_acc) : "");
      if (e && e->test_acc == x.test) flags.push_back("test_" + std::string(kSlotNames[s]));
    }
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& e = row.by_modality[s];
      line.push_back(e ? std::to_string(e->epochs) : "");
      if (e && static_cast<double>(e->epochs) == x.epochs) flags.push_back("epochs_" + std::string(kSlotNames[s]));
    }
    std::string joined;
    for (const auto& f : flags) joined += (joined.empty() ? "" : ";") + f;
    line.push_back(joined);
    csv::write_row(out, line);
  }
  return out.str();
}

std::string render_group_csv(const std::vector<GroupAverage>& groups, std::string_view key_name) {
  std::ostringstream out;
  csv::write_row(out, {std::string(key_name), "train", "test", "epochs", "cells", "best"});
  const auto x = group_extremes(groups);
  for (const auto& g : groups) {
    std::string flags;
    auto flag = [&](bool on, const char* name) {
      if (on) flags += (flags.empty() ? "" : ";") + std::string(name);
    };
    flag(g.train_acc == x.train, "train");
    flag(g.test_acc == x.test, "test");
    flag(g.epochs == x.epochs, "epochs");
    csv::write_row(out, {g.key, format_double(g.train_acc), format_double(g.test_acc), format_double(g.epochs),
                         std::to_string(g.cells), flags});
  }
  return out.str();
}

void emit_report(const GridReport& report, ReportFormat format, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create '" + dir.string() + "': " + ec.message());
  if (format == ReportFormat::markdown) {
    write_file(dir / "report.md", render_markdown(report));
    return;
  }
  write_file(dir / "result1.csv", render_result1_csv(report));
  write_file(dir / "result2_optimizer.csv", render_group_csv(report.by_optimizer, "optimizer"));
  write_file(dir / "result2_modality.csv", render_group_csv(report.by_modality, "modality"));
}

void write_run_outputs(const GridReport& report, const std::filesystem::path& dir) {
  for (const auto& c : report.cells) {
    const auto run_dir = dir / "runs" / c.id;
    std::error_code ec;
    std::filesystem::create_directories(run_dir, ec);
    if (ec) throw RuntimeFailure("cannot create '" + run_dir.string() + "': " + ec.message());
    const nlohmann::json summary = {
        {"index", c.index},           {"id", c.id},
        {"encoder", c.encoder},       {"modality", std::string(to_string(c.modality))},
        {"optimizer", std::string(to_string(c.optimizer))},
        {"seed", c.seed},             {"ok", c.ok},
        {"error", c.error},           {"train_acc", c.train_acc},
        {"test_acc", c.test_acc},     {"best_epoch", c.best_epoch},
        {"epochs_run", c.epochs_run},
    };
    write_file(run_dir / "summary.json", summary.dump(2) + "\n");
    write_file(run_dir / "log.json", epoch_log_json(c.logs));
  }
}

std::vector<CellResult> read_run_outputs(const std::filesystem::path& dir) {
  const auto runs = dir / "runs";
  if (!std::filesystem::is_directory(runs)) throw DataError("no runs/ directory under '" + dir.string() + "'");
  std::vector<CellResult> cells;
  for (const auto& entry : std::filesystem::directory_iterator(runs)) {
    if (!entry.is_directory()) continue;
    CellResult c;
    try {
      const auto s = nlohmann::json::parse(read_file(entry.path() / "summary.json"));
      c.index = s.at("index").get<std::size_t>();
      c.id = s.at("id").get<std::string>();
      c.encoder = s.at("encoder").get<std::string>();
      c.modality = parse_modality(s.at("modality").get<std::string>());
      c.optimizer = parse_optimizer(s.at("optimizer").get<std::string>());
      c.seed = s.at("seed").get<std::uint64_t>();
      c.ok = s.at("ok").get<bool>();
      c.error = s.at("error").get<std::string>();
      c.train_acc = s.at("train_acc").get<double>();
      c.test_acc = s.at("test_acc").get<double>();
      c.best_epoch = s.at("best_epoch").get<std::size_t>();
      c.epochs_run = s.at("epochs_run").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("run summary in '" + entry.path().string() + "': " + e.what());
    } catch (const UsageError& e) {
      throw DataError("run summary in '" + entry.path().string() + "': " + e.what());
    }
    c.logs = parse_epoch_log_json(read_file(entry.path() / "log.json"));
    cells.push_back(std::move(c));
  }
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  return cells;
}

}  // namespace loyalty

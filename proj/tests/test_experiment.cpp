#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <random>
#include <sstream>

#include "loyalty/config.hpp"
#include "loyalty/csv.hpp"
#include "loyalty/error.hpp"
#include "loyalty/experiment.hpp"
#include "loyalty/format.hpp"
#include "loyalty/report.hpp"
#include "loyalty/synthetic.hpp"
#include "toy_report.hpp"

using namespace loyalty;
namespace fs = std::filesystem;

namespace {

GridSpec full_spec(std::size_t encoders, std::size_t seeds = 1) {
  GridSpec spec;
  for (std::size_t e = 0; e < encoders; ++e) {
    EncoderSpec enc;
    enc.name = "stub" + std::to_string(e);
    enc.config.d_text = 16;
    enc.config.seed = e;
    spec.encoders.push_back(enc);
  }
  spec.optimizers = {OptimizerKind::adam, OptimizerKind::adamax, OptimizerKind::nadam};
  spec.modalities = {Modality::Both, Modality::X1, Modality::X2};
  for (std::size_t s = 0; s < seeds; ++s) spec.seeds.push_back(s + 1);
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream b;
  b << in.rdbuf();
  return b.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Standard normal CDF.
double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(Grid, CellCounts) {
  EXPECT_EQ(enumerate_cells(full_spec(4)).size(), 27u);
  EXPECT_EQ(enumerate_cells(full_spec(4, 2)).size(), 54u);
  GridSpec one;
  one.encoders = full_spec(1).encoders;
  one.optimizers = {OptimizerKind::adam};
  one.modalities = {Modality::X2};
  one.seeds = {0};
  const auto cells = enumerate_cells(one);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_FALSE(cells[0].encoder.has_value());
  EXPECT_EQ(cells[0].id, "x2-none-adam-s0");
}

TEST(Grid, EmptyAxesRejected) {
  auto spec = full_spec(2);
  spec.optimizers.clear();
  EXPECT_THROW(enumerate_cells(spec), UsageError);
  spec = full_spec(2);
  spec.seeds.clear();
  EXPECT_THROW(enumerate_cells(spec), UsageError);
  spec = full_spec(0);
  EXPECT_THROW(enumerate_cells(spec), UsageError);
  spec.modalities = {Modality::X2};
  EXPECT_NO_THROW(enumerate_cells(spec));
}

TEST(Grid, OrderAndIdsAreStable) {
  const auto cells = enumerate_cells(full_spec(2, 2));
  std::set<std::string> ids;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    EXPECT_EQ(cells[i].index, i);
    ids.insert(cells[i].id);
  }
  EXPECT_EQ(ids.size(), cells.size());
  EXPECT_EQ(cells.front().id, "both-stub0-adam-s1");
  EXPECT_EQ(cells.back().id, "x2-none-nadam-s2");
}

TEST(Summary, OptimizerMeansFromTwoByTwo) {
  std::vector<CellResult> cells;
  const double train[] = {0.6, 0.7, 0.8, 0.9};
  for (std::size_t i = 0; i < 4; ++i) {
    CellResult c;
    c.index = i;
    c.id = "c" + std::to_string(i);
    c.encoder = "e";
    c.modality = i % 2 ? Modality::X1 : Modality::Both;
    c.optimizer = i < 2 ? OptimizerKind::adam : OptimizerKind::nadam;
    c.ok = true;
    c.train_acc = train[i];
    c.test_acc = train[i];
    c.best_epoch = 10 * (i + 1);
    cells.push_back(c);
  }
  const auto r = summarize(cells);
  ASSERT_EQ(r.by_optimizer.size(), 2u);
  EXPECT_EQ(r.by_optimizer[0].key, "adam");
  EXPECT_NEAR(r.by_optimizer[0].test_acc, 0.65, 1e-12);
  EXPECT_NEAR(r.by_optimizer[1].test_acc, 0.85, 1e-12);
  EXPECT_NEAR(r.by_optimizer[1].epochs, 35.0, 1e-12);
}

TEST(Summary, IdenticalCellsAverageToTheCellValue) {
  std::vector<CellResult> cells;
  for (std::size_t i = 0; i < 5; ++i) {
    CellResult c;
    c.index = i;
    c.id = "c" + std::to_string(i);
    c.encoder = "e";
    c.optimizer = OptimizerKind::adamax;
    c.ok = true;
    c.train_acc = 0.7;
    c.test_acc = 0.625;
    c.best_epoch = 12;
    cells.push_back(c);
  }
  const auto r = summarize(cells);
  EXPECT_DOUBLE_EQ(r.by_optimizer[0].test_acc, 0.625);
  EXPECT_DOUBLE_EQ(r.by_modality[0].train_acc, 0.7);
  EXPECT_DOUBLE_EQ(r.by_modality[0].epochs, 12.0);
}

TEST(Summary, ToyReportAveragesAndBests) {
  const auto r = summarize(toy::cells());
  EXPECT_EQ(r.failed, 1u);
  // Recompute every group mean directly from the member cells.
  std::map<std::string, std::vector<const CellResult*>> by_opt, by_mod;
  for (const auto& c : r.cells) {
    if (!c.ok) continue;
    by_opt[std::string(to_string(c.optimizer))].push_back(&c);
    by_mod[std::string(to_string(c.modality))].push_back(&c);
  }
  for (const auto* groups : {&r.by_optimizer, &r.by_modality}) {
    for (const auto& g : *groups) {
      const auto& members = groups == &r.by_optimizer ? by_opt[g.key] : by_mod[g.key];
      ASSERT_EQ(g.cells, members.size()) << g.key;
      double tr = 0, te = 0, ep = 0;
      for (const auto* c : members) {
        tr += c->train_acc;
        te += c->test_acc;
        ep += static_cast<double>(c->best_epoch);
      }
      const double n = static_cast<double>(members.size());
      EXPECT_NEAR(g.train_acc, tr / n, 1e-12) << g.key;
      EXPECT_NEAR(g.test_acc, te / n, 1e-12) << g.key;
      EXPECT_NEAR(g.epochs, ep / n, 1e-12) << g.key;
    }
  }
  EXPECT_EQ(r.by_optimizer.size(), 3u);
  EXPECT_EQ(r.by_optimizer[0].cells, 8u);  // 4 Both + 3 X1 + 1 X2; the failed adam cell is excluded
  ASSERT_EQ(r.result1.size(), 5u);
  EXPECT_EQ(r.result1.back().encoder, "None");
  EXPECT_FALSE(r.result1[3].by_modality[1].has_value());  // failed X1 cell shows as absent
  EXPECT_EQ(r.result1[0].by_modality[0]->test_acc, 0.711);
  EXPECT_EQ(r.cells[*r.best_per_modality[0]].id, "both-bert-base-japanese-v3-adam-s1");
  EXPECT_EQ(r.cells[*r.best_per_modality[2]].id, "x2-none-nadam-s1");
}

TEST(Summary, BestCellTieBreaks) {
  CellResult a, b;
  a.test_acc = b.test_acc = 0.7;
  a.best_epoch = 10;
  b.best_epoch = 12;
  a.id = "z";
  b.id = "a";
  EXPECT_TRUE(better_cell(a, b));
  b.best_epoch = 10;
  EXPECT_TRUE(better_cell(b, a));
  b.test_acc = 0.69;
  EXPECT_TRUE(better_cell(a, b));
}

TEST(Synthetic, BayesSymmetricCases) {
  SyntheticSpec s;
  s.text_weight = 0;
  auto b = bayes_accuracy(s);
  EXPECT_NEAR(b.tabular_only, b.combined, 1e-12);
  EXPECT_NEAR(b.text_only, 0.5, 1e-12);
  s = {};
  s.tabular_weight = 0;
  b = bayes_accuracy(s);
  EXPECT_NEAR(b.text_only, b.combined, 1e-12);
  EXPECT_NEAR(b.tabular_only, 0.5, 1e-9);
}

TEST(Synthetic, BayesAccuraciesMatchIndependentIntegration) {
  SyntheticSpec s;  // a = b = 1, sigma = 0.5
  const auto b = bayes_accuracy(s);
  // Text only: the latent class is known, the tabular signal is noise.
  double text = 0;
  for (double mu : kTextSignal) {
    const double p = phi(mu / std::sqrt(1.0 + 0.25));
    text += std::max(p, 1 - p) / 4;
  }
  EXPECT_NEAR(b.text_only, text, 1e-12);
  // Tabular only and combined by trapezoid integration over s.
  double tab = 0, both = 0;
  const double lo = -10, hi = 10;
  const int steps = 200000;
  const double h = (hi - lo) / steps;
  for (int k = 0; k <= steps; ++k) {
    const double x = lo + k * h;
    const double w = (k == 0 || k == steps ? 0.5 : 1.0) * h * std::exp(-x * x / 2) / std::sqrt(2 * M_PI);
    double p = 0, best = 0;
    for (double mu : kTextSignal) {
      const double q = phi((mu + x) / 0.5);
      p += q / 4;
      best += std::max(q, 1 - q) / 4;
    }
    tab += w * std::max(p, 1 - p);
    both += w * best;
  }
  EXPECT_NEAR(b.tabular_only, tab, 1e-7);
  EXPECT_NEAR(b.combined, both, 1e-7);
  EXPECT_DOUBLE_EQ(b.class_prior, 0.5);
  EXPECT_GT(b.combined, b.text_only);
  EXPECT_GT(b.text_only, b.tabular_only);
}

TEST(Synthetic, LabelFrequencyMatchesPrior) {
  SyntheticSpec s;
  // Monte Carlo over the generative model, independent of the generator code.
  std::mt19937_64 rng(123);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> cls(0, 3);
  int positives = 0;
  const int draws = 400000;
  for (int i = 0; i < draws; ++i) {
    const double z = kTextSignal[cls(rng)] + n01(rng) + 0.5 * n01(rng);
    positives += z > 0;
  }
  const double mc = static_cast<double>(positives) / draws;
  EXPECT_NEAR(bayes_accuracy(s).class_prior, mc, 0.005);
  // 20000 rows put the 0.02 band near six standard errors.
  s.n = 20000;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    s.seed = seed;
    const auto d = generate_synthetic(s);
    double pos = 0;
    for (const auto& r : d.dataset.records) pos += binarize_rating(r.rating);
    EXPECT_NEAR(pos / static_cast<double>(s.n), d.bayes.class_prior, 0.02) << seed;
  }
}

TEST(Synthetic, ShapeAndDeterminism) {
  SyntheticSpec s;
  s.n = 50;
  s.j_in = 3;
  s.seed = 4;
  const auto a = generate_synthetic(s);
  EXPECT_EQ(a.dataset.size(), 50u);
  EXPECT_EQ(a.dataset.schema, (std::vector<std::string>{"f0", "f1", "f2"}));
  EXPECT_EQ(a.dataset.records[7].id, "s07");  // zero-padded to the width of n - 1
  for (const auto& r : a.dataset.records) {
    EXPECT_EQ(r.features.size(), 3u);
    EXPECT_GE(r.rating, 1);
    EXPECT_LE(r.rating, 7);
    EXPECT_FALSE(r.text.empty());
  }
  const auto b = generate_synthetic(s);
  EXPECT_EQ(a.dataset.records.back().text, b.dataset.records.back().text);
  EXPECT_EQ(a.dataset.records.back().features, b.dataset.records.back().features);
}

TEST(Synthetic, DegenerateSpecsRejected) {
  SyntheticSpec s;
  s.text_weight = s.tabular_weight = 0;
  EXPECT_THROW(generate_synthetic(s), UsageError);
  s = {};
  s.n = 19;
  EXPECT_THROW(generate_synthetic(s), UsageError);
  s = {};
  s.text_weight = -1;
  EXPECT_THROW(generate_synthetic(s), UsageError);
}

TEST(Grid, SerialAndParallelRunsAgree) {
  SyntheticSpec s;
  s.n = 240;
  s.seed = 3;
  const auto data = generate_synthetic(s);
  auto spec = full_spec(2);
  spec.train.max_epochs = 6;
  spec.train.patience = 3;
  const auto inputs = prepare_inputs(data.dataset, {}, spec.encoders, {});
  const auto serial = run_grid(spec, inputs, 1);
  const auto parallel = run_grid(spec, inputs, 4);
  EXPECT_EQ(serial.cells, parallel.cells);
  EXPECT_EQ(render_markdown(serial), render_markdown(parallel));
  EXPECT_EQ(serial.failed, 0u);
}

TEST(Grid, FailedCellsAreRecordedNotFatal) {
  SyntheticSpec s;
  s.n = 100;
  const auto data = generate_synthetic(s);
  auto spec = full_spec(1);
  spec.train.max_epochs = 2;
  spec.train.patience = 2;
  auto inputs = prepare_inputs(data.dataset, {}, spec.encoders, {});
  auto& x1 = inputs.encoders[0].rows;
  for (std::size_t r = 0; r < x1.rows; ++r) x1(r, 0) = std::nan("");  // poisons every text cell
  const auto r = run_grid(spec, inputs, 2);
  EXPECT_EQ(r.failed, 6u);
  for (const auto& c : r.cells) {
    EXPECT_EQ(c.ok, c.modality == Modality::X2) << c.id;
    if (!c.ok) EXPECT_NE(c.error.find("non-finite"), std::string::npos) << c.error;
  }
}

TEST(Report, GoldenFiles) {
  const auto r = summarize(toy::cells());
  const auto dir = fresh_dir("loyalty_report_golden");
  emit_report(r, ReportFormat::markdown, dir);
  emit_report(r, ReportFormat::csv, dir);
  for (const char* name : {"report.md", "result1.csv", "result2_optimizer.csv", "result2_modality.csv"}) {
    EXPECT_EQ(slurp(dir / name), slurp(fs::path(LOYALTY_GOLDEN_DIR) / name)) << name;
  }
}

TEST(Report, MarkdownFlagsAndDashes) {
  const auto md = render_markdown(summarize(toy::cells()));
  EXPECT_NE(md.find("**0.711**"), std::string::npos);
  EXPECT_EQ(md.find("**0.690**"), std::string::npos);
  EXPECT_NE(md.find("| bert-large-japanese-char-v2 | 0.760 | - | - |"), std::string::npos);
  EXPECT_NE(md.find("Failed runs excluded from the averages: 1."), std::string::npos);
}

TEST(Report, CsvRoundTripsNumbers) {
  const auto r = summarize(toy::cells());
  const auto rows = csv::parse(render_result1_csv(r));
  ASSERT_EQ(rows.size(), r.result1.size() + 1);
  EXPECT_EQ(rows[0][0], "encoder");
  const char* slots[] = {"both", "x1", "x2"};
  for (std::size_t i = 0; i < r.result1.size(); ++i) {
    EXPECT_EQ(rows[i + 1][0], r.result1[i].encoder);
    for (std::size_t m = 0; m < 3; ++m) {
      const auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(rows[0].begin(), rows[0].end(), name) - rows[0].begin());
      };
      const auto& e = r.result1[i].by_modality[m];
      const auto& test_cell = rows[i + 1][col(std::string("test_") + slots[m])];
      if (!e) {
        EXPECT_TRUE(test_cell.empty());
        continue;
      }
      EXPECT_EQ(parse_double(test_cell).value(), e->test_acc);
      EXPECT_EQ(parse_double(rows[i + 1][col(std::string("train_") + slots[m])]).value(), e->train_acc);
      EXPECT_EQ(parse_int(rows[i + 1][col(std::string("epochs_") + slots[m])]).value(),
                static_cast<long long>(e->epochs));
    }
  }
  const auto groups = csv::parse(render_group_csv(r.by_optimizer, "optimizer"));
  ASSERT_EQ(groups.size(), 4u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(groups[i + 1][0], r.by_optimizer[i].key);
    EXPECT_EQ(parse_double(groups[i + 1][1]).value(), r.by_optimizer[i].train_acc);
    EXPECT_EQ(parse_double(groups[i + 1][2]).value(), r.by_optimizer[i].test_acc);
    EXPECT_EQ(parse_double(groups[i + 1][3]).value(), r.by_optimizer[i].epochs);
  }
}

TEST(Report, RunOutputsRoundTrip) {
  const auto r = summarize(toy::cells());
  const auto dir = fresh_dir("loyalty_run_outputs");
  write_run_outputs(r, dir);
  EXPECT_TRUE(fs::exists(dir / "runs" / "both-bert-base-japanese-v3-adam-s1" / "log.json"));
  const auto back = read_run_outputs(dir);
  EXPECT_EQ(back, r.cells);
  EXPECT_EQ(render_markdown(summarize(back)), render_markdown(r));
}

TEST(Config, ParsesGridAndRejectsUnknownKeys) {
  const auto cfg = parse_experiment_config(R"({
    "data": {"synthetic": {"n": 200, "seed": 4}},
    "encoders": [{"name": "a", "provider": "stub", "d_text": 8}, {"name": "b", "provider": "stub", "seed": 2}],
    "optimizers": ["adam", "nadam"],
    "modalities": ["Both", "X2"],
    "seeds": [1, 2],
    "train": {"max_epochs": 10, "patience": 5, "monitor": "test"},
    "output_dir": "out"
  })", "/base");
  EXPECT_EQ(cfg.grid.encoders.size(), 2u);
  EXPECT_EQ(cfg.grid.encoders[0].config.d_text, 8u);
  EXPECT_EQ(cfg.grid.encoders[1].config.seed, 2u);
  EXPECT_EQ(cfg.grid.train.monitor, Monitor::test);
  EXPECT_EQ(*cfg.output_dir, fs::path("/base/out"));
  EXPECT_EQ(enumerate_cells(cfg.grid).size(), 2u * (2 * 2 + 2));
  EXPECT_EQ(load_config_dataset(cfg).size(), 200u);

  EXPECT_THROW(parse_experiment_config(R"({"data": {"synthetic": {}}, "optimisers": ["adam"]})", "."), UsageError);
  EXPECT_THROW(parse_experiment_config(R"({"data": {"synthetic": {}}, "optimizers": []})", "."), UsageError);
  EXPECT_THROW(parse_experiment_config("{not json", "."), UsageError);
}

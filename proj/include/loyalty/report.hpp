#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "loyalty/experiment.hpp"

namespace loyalty {

enum class ReportFormat { markdown, csv };

ReportFormat parse_report_format(std::string_view name);

// report.md: Result I (best run per encoder and modality; Train / Test /
// Epochs column groups split by modality), Result II (group means by optimizer
// and by modality), best run per modality and the full run list. Absent cells
// render as "-"; the best train and test accuracy and the fewest epochs of
// each table are bold.
std::string render_markdown(const GridReport& report);

// result1.csv: encoder,train_both,train_x1,train_x2,test_both,test_x1,test_x2,
// epochs_both,epochs_x1,epochs_x2,best -- "best" lists the bold columns of
// the row separated by ';'. Numbers use shortest round-trip formatting.
std::string render_result1_csv(const GridReport& report);

// result2_{optimizer,modality}.csv: <key>,train,test,epochs,cells,best
std::string render_group_csv(const std::vector<GroupAverage>& groups, std::string_view key_name);

// markdown -> report.md; csv -> result1.csv, result2_optimizer.csv,
// result2_modality.csv. Throws RuntimeFailure on write errors.
void emit_report(const GridReport& report, ReportFormat format, const std::filesystem::path& dir);

// runs/<cell id>/summary.json and runs/<cell id>/log.json for every cell.
void write_run_outputs(const GridReport& report, const std::filesystem::path& dir);

// Reads back what write_run_outputs wrote.
std::vector<CellResult> read_run_outputs(const std::filesystem::path& dir);

}  // namespace loyalty

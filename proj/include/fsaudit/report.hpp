#pragma once

#include <filesystem>
#include <vector>

#include "fsaudit/runner.hpp"

namespace fsaudit {

void emit_jsonl(const std::vector<ResultRecord>& records,
                const std::filesystem::path& file);
std::vector<nlohmann::json> load_jsonl(const std::filesystem::path& file);

// Long-form CSV plus a dataset x architecture AUC grid per defense label.
void emit_table(const std::vector<ResultRecord>& records,
                const std::filesystem::path& csv_file,
                const std::filesystem::path& txt_file);

// Deterministic SVG charts: grouped AUC bars and, when output-noise records
// exist, the AUC-vs-delta curve. Regenerating from equal records is
// byte-identical.
void emit_plots(const std::vector<ResultRecord>& records,
                const std::filesystem::path& out_dir);

// format: table | jsonl | plot
void emit_report(const std::vector<ResultRecord>& records, const std::string& format,
                 const std::filesystem::path& out_dir);

}  // namespace fsaudit

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace seqpipe {

namespace fs = std::filesystem;

inline constexpr std::array<std::string_view, 11> kReportColumns = {
    "run_id", "train_dataset", "eval_dataset", "translator", "subword_model", "vocab_size",
    "train_limit", "metric", "beam", "score", "tokens_per_sentence"};

struct ReportRow {
  std::string run_id;
  std::string train_dataset;
  std::string eval_dataset;
  std::string translator;
  std::string subword_model;
  std::optional<std::uint32_t> vocab_size;
  std::optional<std::uint64_t> train_limit;
  std::string metric;
  std::uint32_t beam = 1;
  double score = 0.0;
  std::optional<double> tokens_per_sentence;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Full-precision text of one column (empty for nulls). This is what the
/// table CSV stores.
std::string cell(const ReportRow& row, std::string_view column);
/// Numeric value of a numeric column; nullopt for nulls. Throws ConfigError
/// for non-numeric columns.
std::optional<double> numeric_cell(const ReportRow& row, std::string_view column);
bool is_numeric_column(std::string_view column);
bool is_report_column(std::string_view column);

struct ReportTable {
  std::vector<ReportRow> rows;

  /// Throws DataError on a duplicate (run_id, eval_dataset, metric, beam).
  void validate() const;
  /// Sorts by (run_id, eval_dataset, metric, beam).
  void sort();

  std::string to_csv() const;
  static ReportTable from_csv(std::string_view text);
  nlohmann::json to_json() const;
  static ReportTable from_json(const nlohmann::json& j);

  friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

struct CollectResult {
  ReportTable table;
  std::vector<std::string> warnings;
};

/// Walks `root` for run.json files and the evaluation results stored beside
/// them. Unreadable files are skipped with a warning naming them.
CollectResult collect(const fs::path& root);

/// Mean tokens per sentence over both sides of a variant's training split,
/// read from its stats.json; nullopt when the stats are missing.
std::optional<double> tokens_per_sentence(const fs::path& stats_json);

// ---------------------------------------------------------------------------
// Report generators. Each writes report.csv, report.json and chart_*.svg into
// `out_dir`; numbers in the CSV and the charts use two decimals.

struct ComparisonRow {
  std::string train_dataset;
  std::string eval_dataset;
  std::string subword_model;
  std::optional<std::uint32_t> vocab_size;
  double score_a = 0.0;
  double score_b = 0.0;
  double delta = 0.0;  // b - a
};

struct Comparison {
  std::string system_a;
  std::string system_b;
  std::string metric;
  std::vector<ComparisonRow> rows;
  double signed_mean = 0.0;
  double absolute_mean = 0.0;
};

/// Matches rows of two translators by (train_dataset, eval_dataset,
/// subword_model, vocab_size). Throws DataError listing unmatched keys.
Comparison system_comparison(const ReportTable& table, const std::string& system_a, const std::string& system_b,
                             const std::string& metric);
void write_comparison(const Comparison& c, const fs::path& out_dir);

/// One CSV row per table row of the selected metrics, ordered by the group
/// columns; one grouped bar chart per metric.
void metric_report(const ReportTable& table, const std::vector<std::string>& group_by,
                   const std::vector<std::string>& metrics, const fs::path& out_dir);

/// Rows are (run, beam), columns eval datasets. Missing cells stay empty.
void cross_dataset_matrix(const ReportTable& table, const std::string& metric, const fs::path& out_dir);

enum class AxisSide { left, right };

struct YVariable {
  std::string variable;  // a metric name (its score) or a numeric column
  AxisSide axis = AxisSide::left;
};

inline const std::vector<std::string> kDefaultSeriesBy = {"train_dataset", "translator", "subword_model",
                                                          "train_limit", "beam"};

/// Line chart of y variables against a numeric x column, one series per
/// (series_by values, y variable), points sorted by x. Throws ConfigError for
/// a non-numeric x or an unknown y variable.
void multivariable_report(const ReportTable& table, const std::string& x, const std::vector<YVariable>& y,
                          const fs::path& out_dir, const std::vector<std::string>& series_by = kDefaultSeriesBy);

/// Keeps rows whose eval dataset is the run's own training dataset.
ReportTable own_evaluations(const ReportTable& table);

}  // namespace seqpipe

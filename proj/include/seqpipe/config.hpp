#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seqpipe/dataset.hpp"
#include "seqpipe/evaluation.hpp"
#include "seqpipe/reporting.hpp"
#include "seqpipe/translator.hpp"

namespace seqpipe {

/// A dataset whose splits are produced by filtering another declared dataset.
struct DerivedFrom {
  std::string source;  // name of the dataset to filter
  PairFilter filter;
};

struct DatasetConfig {
  DatasetDecl decl;
  std::optional<DerivedFrom> derive;
};

enum class EvalScope { own, compatible };
std::string_view to_string(EvalScope s);
EvalScope parse_eval_scope(std::string_view s);

enum class ReportType { metric, cross_dataset, multivariable, comparison };

struct ReportSpec {
  std::string name;
  ReportType type = ReportType::metric;
  std::vector<std::string> metrics = {"bleu"};  // metric reports
  std::vector<std::string> group_by;
  std::string metric = "bleu";  // cross_dataset, comparison
  std::string x = "vocab_size";
  std::vector<YVariable> y;
  std::vector<std::string> series_by = kDefaultSeriesBy;
  EvalScope scope = EvalScope::compatible;  // multivariable defaults to own
  std::string system_a;
  std::string system_b;
};

struct ExperimentConfig {
  fs::path config_dir;  // relative paths resolve against it
  fs::path base_path;
  bool interactive = true;
  std::size_t jobs = 1;

  std::vector<DatasetConfig> datasets;
  SplitPolicy splits;
  std::vector<NormalizationStep> normalization;
  std::vector<SubwordPlanEntry> subword;
  TrainOptions tokenizer;

  std::vector<std::string> translators = {"lexicon"};
  TrainConfig train;

  std::vector<MetricSpec> metrics = {MetricSpec::make_bleu(), MetricSpec::make_chrf()};
  std::vector<std::uint32_t> beams = {5};
  std::uint32_t max_output_length = 256;
  EvalScope scope = EvalScope::compatible;

  std::vector<ReportSpec> reports;

  std::vector<DatasetDecl> decls() const;
  const ReportSpec* find_report(std::string_view name) const;
};

/// Parses and validates a TOML experiment file. Unknown keys, wrong types and
/// inconsistent values raise ConfigError naming the offending key.
ExperimentConfig load_config(const fs::path& path);
ExperimentConfig parse_config(std::string_view toml_text, const fs::path& config_dir);

}  // namespace seqpipe

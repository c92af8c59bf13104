#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqpipe/dataset.hpp"
#include "seqpipe/translator.hpp"

namespace seqpipe {

// ---------------------------------------------------------------------------
// BLEU

enum class BleuSmoothing {
  none,   // a zero n-gram count gives a zero score
  floor,  // zero counts become epsilon / total
  exp,    // the k-th zero count becomes 1 / (2^k * total)
};
std::string_view to_string(BleuSmoothing s);
BleuSmoothing parse_bleu_smoothing(std::string_view s);

/// Splits every Unicode punctuation character into its own token, then splits
/// on whitespace. Scores are only comparable within one tokenizer version.
inline constexpr std::string_view kBleuTokenizerVersion = "punct-split-v1";
std::vector<std::string> bleu_tokenize(std::string_view text);

struct BleuConfig {
  int max_ngram = 4;
  BleuSmoothing smoothing = BleuSmoothing::floor;
  double epsilon = 0.1;
};

struct BleuStats {
  std::vector<std::uint64_t> matches;  // clipped, per order
  std::vector<std::uint64_t> totals;   // hypothesis n-grams, per order
  std::uint64_t hyp_length = 0;
  std::uint64_t ref_length = 0;
};

BleuStats bleu_statistics(std::span<const std::string> hyps, std::span<const std::string> refs, int max_ngram);
/// Corpus BLEU on 0..100. Orders for which the hypothesis has no n-grams at all
/// are left out of the geometric mean. Throws DataError on a length mismatch
/// or an empty corpus.
double score_bleu(std::span<const std::string> hyps, std::span<const std::string> refs,
                  const BleuConfig& config = {});
double bleu_from_stats(const BleuStats& stats, const BleuConfig& config);

// ---------------------------------------------------------------------------
// chrF

struct ChrfConfig {
  int char_order = 6;
  int word_order = 0;
  double beta = 2.0;
};

/// Corpus chrF on 0..100: n-gram statistics are summed over the corpus,
/// precision and recall are averaged over the orders with n-grams on both
/// sides, and one F-beta is taken from the averages. Whitespace is removed
/// before character n-grams are extracted.
double score_chrf(std::span<const std::string> hyps, std::span<const std::string> refs,
                  const ChrfConfig& config = {});

// ---------------------------------------------------------------------------
// External metrics

struct ExternalScore {
  std::optional<double> score;
  std::string error;
  std::string raw_output;
};

/// Runs the adapter with {INPUT} bound to the hypotheses and {OUTPUT} to the
/// references; the score is its single-line numeric stdout. Failures are
/// reported in `error`, never thrown.
ExternalScore external_metric(const CommandTemplate& adapter, const fs::path& hyps, const fs::path& refs,
                              const fs::path& work_dir);

// ---------------------------------------------------------------------------
// Evaluating runs

struct MetricSpec {
  std::string name;  // "bleu", "chrf", or the name of an external metric
  BleuConfig bleu;
  ChrfConfig chrf;
  std::optional<CommandTemplate> external;

  static MetricSpec make_bleu(BleuConfig c = {}) { return {"bleu", c, {}, std::nullopt}; }
  static MetricSpec make_chrf(ChrfConfig c = {}) { return {"chrf", {}, c, std::nullopt}; }
  nlohmann::json params() const;
};

struct EvaluationResult {
  std::string run_id;
  std::string train_dataset;
  DatasetRef eval_dataset;
  std::string translator;
  std::string subword_model;
  std::optional<std::uint32_t> vocab_size;
  std::optional<std::uint64_t> train_limit;
  std::string metric;
  nlohmann::json metric_params;
  DecodeConfig decode;
  double score = 0.0;
  fs::path hypothesis_path;
};

nlohmann::json to_json(const EvaluationResult& r);
EvaluationResult evaluation_from_json(const nlohmann::json& j);

struct EvaluationFailure {
  std::string eval_dataset;
  std::string metric;  // empty when the whole dataset failed
  std::string message;
};

struct EvaluationReport {
  std::vector<EvaluationResult> results;
  std::vector<EvaluationFailure> failures;
};

struct EvaluateOptions {
  bool force = false;
  std::size_t workers = 1;
};

/// Every dataset in `registry` with the run's language pair, the run's own
/// dataset included, in registry order.
std::vector<DatasetRef> compatible_datasets(const RunRecord& run, std::span<const DatasetRef> registry);

/// <run_dir>/eval/<dataset id>/beam<k>
fs::path eval_dir(const RunRecord& run, const DatasetRef& dataset, const DecodeConfig& decode);

/// Translates each dataset's test source and scores it with every metric.
/// A dataset whose translation breaks the contract yields a failure entry and
/// no results; the others proceed. Results are ordered by (dataset, metric).
/// Rewrites <run_dir>/eval/evaluations.csv afterwards.
EvaluationReport evaluate_run(Translator& translator, const RunRecord& run, std::span<const DatasetRef> datasets,
                              std::span<const MetricSpec> metrics, const DecodeConfig& decode,
                              const EvaluateOptions& options = {});

/// All stored results of a run, in path order.
std::vector<EvaluationResult> load_evaluations(const fs::path& run_dir);
void write_evaluations_csv(const fs::path& run_dir);

inline constexpr std::array<std::string_view, 8> kEvaluationCsvColumns = {
    "run_id", "train_dataset", "eval_dataset", "subword_model", "vocab_size", "metric", "beam", "score"};

}  // namespace seqpipe

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqpipe/dataset.hpp"
#include "seqpipe/subword.hpp"

namespace seqpipe {

/// Token -> count, sorted by count descending, ties by byte order of the token.
using FrequencyTable = std::vector<std::pair<std::string, std::uint64_t>>;

struct LengthBucket {
  std::uint64_t lo = 0;
  std::optional<std::uint64_t> hi;  // exclusive; unset for the overflow bucket
  std::string label() const;
};

/// Unit buckets for lengths 0..49, width-10 buckets from 50 to 199, and one
/// overflow bucket for 200+.
const std::vector<LengthBucket>& length_buckets();
std::size_t bucket_index(std::uint64_t length);

struct SideStats {
  std::uint64_t sentence_count = 0;
  std::uint64_t token_count = 0;
  std::uint64_t min_length = 0;
  std::uint64_t max_length = 0;
  double mean_length = 0.0;
  std::vector<std::uint64_t> histogram;  // aligned with length_buckets()
  FrequencyTable frequencies;
  double unknowns_per_sentence = 0.0;
  double unknown_sentence_fraction = 0.0;  // sentences with at least one <unk>

  friend bool operator==(const SideStats&, const SideStats&) = default;
};

struct SplitStats {
  std::string split;
  SideStats src;
  SideStats trg;

  friend bool operator==(const SplitStats&, const SplitStats&) = default;
};

struct DatasetStats {
  std::string dataset_id;
  std::string variant;  // variant directory name, empty for raw text
  std::vector<SplitStats> splits;  // train, val, test
  FrequencyTable train_frequencies;  // both sides of the training split combined

  const SplitStats& split(std::string_view name) const;
  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

/// Tokenizers for each side; a missing model (or scheme none) means whitespace
/// tokenization.
struct SideModels {
  const TokenizerModel* src = nullptr;
  const TokenizerModel* trg = nullptr;
};

/// Splits must hold normalized text. Throws PreconditionError if train is empty.
DatasetStats compute_stats(const SplitSet& splits, SideModels models = {});
DatasetStats compute_stats(const SplitSet& splits, const TokenizerModel* model);

SideStats side_stats(const std::vector<std::string>& lines, const TokenizerModel* model);
FrequencyTable sorted_frequencies(const std::vector<std::pair<std::string, std::uint64_t>>& counts);

/// Writes stats.json, token_freq.csv and the four plot_*.svg charts.
void emit_stats(const DatasetStats& stats, const std::filesystem::path& out_dir);

inline constexpr std::array<std::string_view, 4> kStatsPlots = {
    "plot_sentences.svg", "plot_tokens.svg", "plot_lengths.svg", "plot_token_freq.svg"};

nlohmann::json to_json(const DatasetStats& stats);
DatasetStats stats_from_json(const nlohmann::json& j);

}  // namespace seqpipe

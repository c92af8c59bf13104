#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqpipe/normalization.hpp"
#include "seqpipe/scheme.hpp"

namespace seqpipe {

namespace fs = std::filesystem;

struct LanguagePair {
  std::string src;
  std::string trg;

  std::string str() const { return src + "-" + trg; }
  static LanguagePair parse(std::string_view text);  // "de-en"

  friend auto operator<=>(const LanguagePair&, const LanguagePair&) = default;
};

/// A declared training-size limit. "original" carries no limit.
struct SizeSpec {
  std::string label = "original";
  std::optional<std::uint64_t> limit;

  /// "original" -> no limit; "100k" -> 100000; "1m" / "1M" -> 1000000; "5000" -> 5000.
  static SizeSpec from_label(std::string_view label);

  friend auto operator<=>(const SizeSpec&, const SizeSpec&) = default;
};

struct DatasetRef {
  std::string name;
  LanguagePair languages;
  SizeSpec size;
  fs::path base_path;

  /// Stable identifier used in run ids, report rows and eval paths:
  /// "<name>_<src>-<trg>_<size_label>".
  std::string id() const;

  /// Throws ConfigError when the reference breaks its invariants.
  void validate(bool allow_same_language = false) const;

  friend bool operator==(const DatasetRef& a, const DatasetRef& b) {
    return a.name == b.name && a.languages == b.languages && a.size == b.size &&
           a.base_path == b.base_path;
  }
};

/// One `[[datasets]]` entry of the experiment config.
struct DatasetDecl {
  std::string name;
  std::vector<LanguagePair> languages;
  std::vector<SizeSpec> sizes;
  bool allow_same_language = false;
};

/// Canonical on-disk layout:
///   <base>/<name>/<src>-<trg>/<size>/data/{raw,splits,encoded/<variant>}
///   <base>/<name>/<src>-<trg>/<size>/{vocabs,models,stats,reports}
namespace layout {
fs::path dataset_dir(const DatasetRef& ref);
fs::path raw_dir(const DatasetRef& ref);
fs::path splits_dir(const DatasetRef& ref);
fs::path encoded_root(const DatasetRef& ref);
fs::path vocabs_root(const DatasetRef& ref);
fs::path models_root(const DatasetRef& ref);
fs::path stats_root(const DatasetRef& ref);
fs::path reports_root(const DatasetRef& ref);

fs::path raw_file(const DatasetRef& ref, const std::string& lang);
fs::path split_file(const DatasetRef& ref, std::string_view split, const std::string& lang);
fs::path split_meta_file(const DatasetRef& ref, std::string_view split, const std::string& column);

/// Every directory ensure_layout() maintains, in creation order.
std::vector<fs::path> skeleton(const DatasetRef& ref);
}  // namespace layout

struct ParallelCorpus {
  std::vector<std::string> src;
  std::vector<std::string> trg;
  // Optional per-pair metadata columns (e.g. "domain", "lang"), aligned with src.
  std::map<std::string, std::vector<std::string>> columns;

  std::size_t size() const { return src.size(); }
  bool empty() const { return src.empty(); }
  /// Throws DataError when sides or metadata columns are misaligned.
  void validate() const;
  ParallelCorpus select(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const ParallelCorpus&, const ParallelCorpus&) = default;
};

enum class Provenance { given_splits, derived_from_raw };

inline constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};

struct SplitSet {
  ParallelCorpus train;
  ParallelCorpus val;
  ParallelCorpus test;
  Provenance provenance = Provenance::given_splits;
  std::optional<std::uint64_t> seed;

  const ParallelCorpus& split(std::string_view name) const;
  ParallelCorpus& split(std::string_view name);

  friend bool operator==(const SplitSet&, const SplitSet&) = default;
};

struct SplitPolicy {
  std::size_t val_size = 0;
  std::size_t test_size = 0;
  std::uint64_t seed = 1234;
};

struct VariantSpec {
  DatasetRef dataset;
  std::vector<NormalizationStep> normalization;
  SubwordScheme subword = SubwordScheme::none;
  std::optional<std::uint32_t> vocab_size;
  std::optional<std::uint64_t> train_limit;

  /// "<subword>_<vocab>" or "<subword>" when no vocabulary size applies.
  std::string dir_name() const;
  /// Unique key: dataset id + subword + vocab + limit.
  std::string key() const;

  fs::path encoded_dir() const;
  fs::path vocab_dir() const;
  fs::path stats_dir() const;
};

/// One `[[subword]]` entry: a scheme and the vocabulary sizes to try with it.
/// An empty list means "no vocabulary size" (bytes, none).
struct SubwordPlanEntry {
  SubwordScheme scheme = SubwordScheme::none;
  std::vector<std::uint32_t> vocab_sizes;
};

// Pair filters: keep only pairs of one language, one domain, or carrying a
// leading tag on the source side.
struct LanguageFilter {
  std::string code;
  std::string column = "lang";
};
struct DomainFilter {
  std::string label;
  std::string column = "domain";
};
struct LeadingTagFilter {
  std::string tag;
  bool strip = false;
};
using PairFilter = std::variant<LanguageFilter, DomainFilter, LeadingTagFilter>;

struct MissingDataset {
  DatasetRef ref;
  std::string reason;
};

struct IndexResult {
  std::vector<DatasetRef> refs;  // datasets with usable files, declaration order
  std::vector<MissingDataset> missing;
  std::vector<MissingDataset> errors;  // malformed layouts
};

/// Expands declarations into refs: name x language pair x size, in declaration
/// order. Validates each ref.
std::vector<DatasetRef> expand_refs(const fs::path& base_path, std::span<const DatasetDecl> decls);

/// Finds the declared datasets that have data on disk. A sized ref (one with a
/// limit) also counts as present when its "original" sibling has data, since
/// it is derived from it.
IndexResult index_datasets(const fs::path& base_path, std::span<const DatasetDecl> decls);

enum class DataSource { splits, raw, derived, none };
/// What a dataset directory currently offers. Throws DataError on half-present
/// files (e.g. train.de without train.en).
DataSource probe_data(const DatasetRef& ref);

struct LayoutResult {
  std::vector<fs::path> created;
  bool declined = false;
};

using ConfirmFn = std::function<bool(const fs::path&)>;

/// Creates the canonical skeleton. In interactive mode every missing directory
/// is confirmed first; a single "no" aborts before anything is created.
LayoutResult ensure_layout(const DatasetRef& ref, bool interactive, const ConfirmFn& confirm = {});

SplitSet make_splits(const ParallelCorpus& raw, const SplitPolicy& policy);
SplitSet subset_training(const SplitSet& splits, std::uint64_t limit);
SplitSet filter_pairs(const SplitSet& splits, const PairFilter& filter);

std::vector<VariantSpec> enumerate_variants(std::span<const DatasetRef> refs,
                                            const std::vector<NormalizationStep>& normalization,
                                            std::span<const SubwordPlanEntry> plan);

/// Deterministic permutation of 0..n-1 (Fisher-Yates over mt19937_64), identical
/// on every platform.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

ParallelCorpus read_corpus(const fs::path& src, const fs::path& trg);
ParallelCorpus read_raw(const DatasetRef& ref);
SplitSet read_splits(const DatasetRef& ref);
/// Writes split files plus `splits.json` (provenance, seed, counts).
void write_splits(const DatasetRef& ref, const SplitSet& splits);

nlohmann::json to_json(const DatasetRef& ref);
DatasetRef dataset_ref_from_json(const nlohmann::json& j);
nlohmann::json to_json(const VariantSpec& v);
VariantSpec variant_from_json(const nlohmann::json& j);

}  // namespace seqpipe

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "seqpipe/dataset.hpp"
#include "seqpipe/subword.hpp"

// Materialized variants on disk:
//   <encoded_dir>/{train,val,test}.<lang>   encoded lines
//   <encoded_dir>/variant.json              completion marker
//   <vocab_dir>/<lang>.vocab, <lang>.model.json
namespace seqpipe {

namespace variant_files {
fs::path encoded_file(const VariantSpec& v, std::string_view split, const std::string& lang);
fs::path vocab_file(const VariantSpec& v, const std::string& lang);
fs::path model_file(const VariantSpec& v, const std::string& lang);
fs::path marker_file(const VariantSpec& v);
}  // namespace variant_files

bool is_materialized(const VariantSpec& v);

/// Normalizes `splits` with the variant's steps, trains one tokenizer per
/// language on the training side, writes models, vocabularies and encoded
/// splits, and finally the marker file.
void materialize_variant(const VariantSpec& v, const SplitSet& splits, const TrainOptions& options = {});

/// Applies the variant's normalization to every split.
SplitSet normalize_splits(const SplitSet& splits, const std::vector<NormalizationStep>& steps);

/// A materialized variant with its tokenizers loaded.
struct VariantArtifacts {
  VariantSpec variant;
  TokenizerModel src_model;
  TokenizerModel trg_model;

  fs::path encoded(std::string_view split, bool source) const;
  fs::path vocab(bool source) const;

  /// Throws PreconditionError naming the variant when it was never materialized.
  static VariantArtifacts load(const VariantSpec& v);
};

}  // namespace seqpipe

#include "seqpipe/variant_store.hpp"

#include "seqpipe/error.hpp"
#include "seqpipe/io.hpp"

namespace seqpipe {

namespace variant_files {

fs::path encoded_file(const VariantSpec& v, std::string_view split, const std::string& lang) {
  return v.encoded_dir() / (std::string(split) + "." + lang);
}
fs::path vocab_file(const VariantSpec& v, const std::string& lang) { return v.vocab_dir() / (lang + ".vocab"); }
fs::path model_file(const VariantSpec& v, const std::string& lang) {
  return v.vocab_dir() / (lang + ".model.json");
}
fs::path marker_file(const VariantSpec& v) { return v.encoded_dir() / "variant.json"; }

}  // namespace variant_files

bool is_materialized(const VariantSpec& v) { return fs::exists(variant_files::marker_file(v)); }

SplitSet normalize_splits(const SplitSet& splits, const std::vector<NormalizationStep>& steps) {
  Normalizer norm(steps);
  SplitSet out = splits;
  for (auto name : kSplitNames) {
    auto& c = out.split(name);
    c.src = norm.apply_all(c.src);
    c.trg = norm.apply_all(c.trg);
  }
  return out;
}

void materialize_variant(const VariantSpec& v, const SplitSet& splits, const TrainOptions& options) {
  if (splits.train.empty())
    throw PreconditionError("variant " + v.key() + ": training split is empty");
  SplitSet norm = normalize_splits(splits, v.normalization);
  const auto& langs = v.dataset.languages;

  TokenizerModel src = train_tokenizer(v, norm.train.src, options);
  TokenizerModel trg = train_tokenizer(v, norm.train.trg, options);
  src.save(variant_files::model_file(v, langs.src));
  trg.save(variant_files::model_file(v, langs.trg));
  src.vocab().write_file(variant_files::vocab_file(v, langs.src));
  trg.vocab().write_file(variant_files::vocab_file(v, langs.trg));

  nlohmann::json counts = nlohmann::json::object();
  for (auto name : kSplitNames) {
    const auto& c = norm.split(name);
    std::vector<std::string> enc_src, enc_trg;
    enc_src.reserve(c.size());
    enc_trg.reserve(c.size());
    for (const auto& line : c.src) enc_src.push_back(src.encode_line(line));
    for (const auto& line : c.trg) enc_trg.push_back(trg.encode_line(line));
    io::write_lines(variant_files::encoded_file(v, name, langs.src), enc_src);
    io::write_lines(variant_files::encoded_file(v, name, langs.trg), enc_trg);
    counts[std::string(name)] = c.size();
  }

  io::write_json(variant_files::marker_file(v), {
                                                    {"variant", to_json(v)},
                                                    {"key", v.key()},
                                                    {"counts", counts},
                                                    {"src_vocab_size", src.vocab().size()},
                                                    {"trg_vocab_size", trg.vocab().size()},
                                                    {"created_at", io::utc_timestamp()},
                                                });
}

fs::path VariantArtifacts::encoded(std::string_view split, bool source) const {
  return variant_files::encoded_file(variant, split,
                                     source ? variant.dataset.languages.src : variant.dataset.languages.trg);
}

fs::path VariantArtifacts::vocab(bool source) const {
  return variant_files::vocab_file(variant, source ? variant.dataset.languages.src : variant.dataset.languages.trg);
}

VariantArtifacts VariantArtifacts::load(const VariantSpec& v) {
  if (!is_materialized(v))
    throw PreconditionError("variant " + v.key() + " is not materialized (missing " +
                            variant_files::marker_file(v).string() + "); run build first");
  VariantArtifacts a;
  a.variant = v;
  a.src_model = TokenizerModel::load(variant_files::model_file(v, v.dataset.languages.src));
  a.trg_model = TokenizerModel::load(variant_files::model_file(v, v.dataset.languages.trg));
  return a;
}

}  // namespace seqpipe

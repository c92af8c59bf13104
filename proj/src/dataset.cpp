#include "seqpipe/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <random>
#include <set>

#include "seqpipe/error.hpp"
#include "seqpipe/io.hpp"

namespace seqpipe {

// ---------------------------------------------------------------------------
// Subword scheme names

namespace {

struct SchemeName {
  SubwordScheme scheme;
  std::string_view name;
};

constexpr SchemeName kSchemeNames[] = {
    {SubwordScheme::bytes, "bytes"},
    {SubwordScheme::chars, "chars"},
    {SubwordScheme::chars_bytes, "chars+bytes"},
    {SubwordScheme::unigram, "unigram"},
    {SubwordScheme::unigram_bytes, "unigram+bytes"},
    {SubwordScheme::bpe, "bpe"},
    {SubwordScheme::bpe_bytes, "bpe+bytes"},
    {SubwordScheme::words, "words"},
    {SubwordScheme::words_bytes, "words+bytes"},
    {SubwordScheme::none, "none"},
};

}  // namespace

std::string_view to_string(SubwordScheme scheme) {
  for (const auto& s : kSchemeNames)
    if (s.scheme == scheme) return s.name;
  return "unknown";
}

SubwordScheme parse_subword_scheme(std::string_view name) {
  std::string lowered;
  for (char c : name) lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  // "word" is accepted as an alias for "words".
  if (lowered == "word") return SubwordScheme::words;
  if (lowered == "word+bytes") return SubwordScheme::words_bytes;
  for (const auto& s : kSchemeNames)
    if (s.name == lowered) return s.scheme;
  throw ConfigError("unknown subword model '" + std::string(name) + "'");
}

bool has_byte_fallback(SubwordScheme scheme) {
  switch (scheme) {
    case SubwordScheme::chars_bytes:
    case SubwordScheme::unigram_bytes:
    case SubwordScheme::bpe_bytes:
    case SubwordScheme::words_bytes:
      return true;
    default:
      return false;
  }
}

bool requires_vocab_size(SubwordScheme scheme) {
  return scheme != SubwordScheme::bytes && scheme != SubwordScheme::none;
}

// ---------------------------------------------------------------------------
// Identity types

LanguagePair LanguagePair::parse(std::string_view text) {
  auto dash = text.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 >= text.size() ||
      text.find('-', dash + 1) != std::string_view::npos) {
    throw ConfigError("language pair must look like 'de-en', got '" + std::string(text) + "'");
  }
  return {std::string(text.substr(0, dash)), std::string(text.substr(dash + 1))};
}

SizeSpec SizeSpec::from_label(std::string_view label) {
  if (label.empty()) throw ConfigError("empty size label");
  if (label == "original") return {};
  std::string digits;
  std::size_t i = 0;
  while (i < label.size() && std::isdigit(static_cast<unsigned char>(label[i]))) digits += label[i++];
  std::uint64_t mult = 1;
  if (i < label.size()) {
    char suffix = static_cast<char>(std::tolower(static_cast<unsigned char>(label[i])));
    if (suffix == 'k') {
      mult = 1000;
    } else if (suffix == 'm') {
      mult = 1000000;
    } else {
      digits.clear();
    }
    ++i;
  }
  if (digits.empty() || i != label.size()) {
    throw ConfigError("size label '" + std::string(label) +
                      "' is neither 'original' nor a count like 100k; give an explicit limit");
  }
  std::uint64_t n = std::stoull(digits) * mult;
  if (n == 0) throw ConfigError("size label '" + std::string(label) + "' has a zero limit");
  return {std::string(label), n};
}

std::string DatasetRef::id() const { return name + "_" + languages.str() + "_" + size.label; }

void DatasetRef::validate(bool allow_same_language) const {
  if (name.empty()) throw ConfigError("dataset name must be non-empty");
  if (name.find('/') != std::string::npos || name == "." || name == "..")
    throw ConfigError("dataset name '" + name + "' is not a valid directory name");
  if (languages.src.empty() || languages.trg.empty())
    throw ConfigError("dataset '" + name + "' has an empty language code");
  if (!allow_same_language && languages.src == languages.trg)
    throw ConfigError("dataset '" + name + "' uses the same source and target language '" +
                      languages.src + "' (set allow_same_language to permit it)");
  if (size.label.empty()) throw ConfigError("dataset '" + name + "' has an empty size label");
  if (size.label == "original" && size.limit)
    throw ConfigError("size label 'original' cannot carry a limit");
  if (size.label != "original" && !size.limit)
    throw ConfigError("size label '" + size.label + "' of dataset '" + name + "' needs a limit");
}

// ---------------------------------------------------------------------------
// Layout

namespace layout {

fs::path dataset_dir(const DatasetRef& ref) {
  return ref.base_path / ref.name / ref.languages.str() / ref.size.label;
}
fs::path raw_dir(const DatasetRef& ref) { return dataset_dir(ref) / "data" / "raw"; }
fs::path splits_dir(const DatasetRef& ref) { return dataset_dir(ref) / "data" / "splits"; }
fs::path encoded_root(const DatasetRef& ref) { return dataset_dir(ref) / "data" / "encoded"; }
fs::path vocabs_root(const DatasetRef& ref) { return dataset_dir(ref) / "vocabs"; }
fs::path models_root(const DatasetRef& ref) { return dataset_dir(ref) / "models"; }
fs::path stats_root(const DatasetRef& ref) { return dataset_dir(ref) / "stats"; }
fs::path reports_root(const DatasetRef& ref) { return dataset_dir(ref) / "reports"; }

fs::path raw_file(const DatasetRef& ref, const std::string& lang) {
  return raw_dir(ref) / ("data." + lang);
}

fs::path split_file(const DatasetRef& ref, std::string_view split, const std::string& lang) {
  return splits_dir(ref) / (std::string(split) + "." + lang);
}

fs::path split_meta_file(const DatasetRef& ref, std::string_view split, const std::string& column) {
  return splits_dir(ref) / "meta" / (std::string(split) + "." + column);
}

std::vector<fs::path> skeleton(const DatasetRef& ref) {
  return {raw_dir(ref),     splits_dir(ref),  encoded_root(ref), vocabs_root(ref),
          models_root(ref), stats_root(ref), reports_root(ref)};
}

}  // namespace layout

// ---------------------------------------------------------------------------
// Corpora

void ParallelCorpus::validate() const {
  if (src.size() != trg.size())
    throw DataError("misaligned corpus: " + std::to_string(src.size()) + " source vs " +
                    std::to_string(trg.size()) + " target lines");
  for (const auto& [name, col] : columns)
    if (col.size() != src.size())
      throw DataError("metadata column '" + name + "' has " + std::to_string(col.size()) +
                      " rows, corpus has " + std::to_string(src.size()));
}

ParallelCorpus ParallelCorpus::select(const std::vector<std::size_t>& indices) const {
  ParallelCorpus out;
  out.src.reserve(indices.size());
  out.trg.reserve(indices.size());
  for (auto i : indices) {
    out.src.push_back(src[i]);
    out.trg.push_back(trg[i]);
  }
  for (const auto& [name, col] : columns) {
    auto& dst = out.columns[name];
    dst.reserve(indices.size());
    for (auto i : indices) dst.push_back(col[i]);
  }
  return out;
}

const ParallelCorpus& SplitSet::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw Error("unknown split '" + std::string(name) + "'");
}

ParallelCorpus& SplitSet::split(std::string_view name) {
  return const_cast<ParallelCorpus&>(std::as_const(*this).split(name));
}

// ---------------------------------------------------------------------------
// Variants

std::string VariantSpec::dir_name() const {
  std::string out(to_string(subword));
  if (vocab_size) out += "_" + std::to_string(*vocab_size);
  return out;
}

std::string VariantSpec::key() const {
  std::string k = dataset.id() + "/" + dir_name();
  k += train_limit ? "/limit=" + std::to_string(*train_limit) : "/limit=none";
  return k;
}

fs::path VariantSpec::encoded_dir() const { return layout::encoded_root(dataset) / dir_name(); }
fs::path VariantSpec::vocab_dir() const { return layout::vocabs_root(dataset) / dir_name(); }
fs::path VariantSpec::stats_dir() const { return layout::stats_root(dataset) / dir_name(); }

std::vector<DatasetRef> expand_refs(const fs::path& base_path, std::span<const DatasetDecl> decls) {
  std::vector<DatasetRef> refs;
  for (const auto& d : decls) {
    for (const auto& pair : d.languages) {
      for (const auto& size : d.sizes) {
        DatasetRef ref{d.name, pair, size, base_path};
        ref.validate(d.allow_same_language);
        refs.push_back(std::move(ref));
      }
    }
  }
  return refs;
}

std::vector<VariantSpec> enumerate_variants(std::span<const DatasetRef> refs,
                                            const std::vector<NormalizationStep>& normalization,
                                            std::span<const SubwordPlanEntry> plan) {
  std::vector<VariantSpec> out;
  for (const auto& ref : refs) {
    for (const auto& entry : plan) {
      std::vector<std::optional<std::uint32_t>> sizes;
      if (entry.vocab_sizes.empty()) {
        if (requires_vocab_size(entry.scheme))
          throw ConfigError("subword model '" + std::string(to_string(entry.scheme)) +
                            "' needs at least one vocab size");
        sizes.emplace_back(std::nullopt);
      } else {
        std::vector<std::uint32_t> sorted = entry.vocab_sizes;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        for (auto v : sorted) {
          if (v == 0) throw ConfigError("vocab sizes must be positive");
          sizes.emplace_back(v);
        }
      }
      for (const auto& v : sizes) {
        VariantSpec spec;
        spec.dataset = ref;
        spec.normalization = normalization;
        spec.subword = entry.scheme;
        spec.vocab_size = v;
        spec.train_limit = ref.size.limit;
        out.push_back(std::move(spec));
      }
    }
  }

  std::map<std::string, int> seen;
  for (const auto& v : out) ++seen[v.key()];
  std::string dups;
  for (const auto& [key, n] : seen) {
    if (n > 1) dups += (dups.empty() ? "" : ", ") + key;
  }
  if (!dups.empty()) throw ConfigError("duplicate variant keys: " + dups);
  return out;
}

// ---------------------------------------------------------------------------
// Disk probing and layout

DataSource probe_data(const DatasetRef& ref) {
  const std::string langs[] = {ref.languages.src, ref.languages.trg};
  std::vector<std::string> present, absent;
  for (auto split : kSplitNames) {
    for (const auto& lang : langs) {
      fs::path p = layout::split_file(ref, split, lang);
      (fs::is_regular_file(p) ? present : absent).push_back(p.filename().string());
    }
  }
  if (!present.empty() && !absent.empty()) {
    std::string missing;
    for (const auto& a : absent) missing += (missing.empty() ? "" : ", ") + a;
    throw DataError("incomplete splits in " + layout::splits_dir(ref).string() + ": missing " + missing);
  }
  if (absent.empty()) return DataSource::splits;

  bool raw_src = fs::is_regular_file(layout::raw_file(ref, ref.languages.src));
  bool raw_trg = fs::is_regular_file(layout::raw_file(ref, ref.languages.trg));
  if (raw_src != raw_trg)
    throw DataError("raw corpus in " + layout::raw_dir(ref).string() + " is missing one side");
  if (raw_src) return DataSource::raw;

  if (ref.size.limit) {
    DatasetRef original = ref;
    original.size = SizeSpec{};
    if (probe_data(original) != DataSource::none) return DataSource::derived;
  }
  return DataSource::none;
}

IndexResult index_datasets(const fs::path& base_path, std::span<const DatasetDecl> decls) {
  std::error_code ec;
  if (!fs::is_directory(base_path, ec))
    throw IoError("base path " + base_path.string() + " is not a readable directory");
  auto it = fs::directory_iterator(base_path, ec);
  if (ec) throw IoError("cannot read base path " + base_path.string() + ": " + ec.message());

  IndexResult result;
  for (const auto& ref : expand_refs(base_path, decls)) {
    try {
      DataSource src = probe_data(ref);
      if (src == DataSource::none) {
        result.missing.push_back({ref, "no split or raw files under " + layout::dataset_dir(ref).string()});
      } else {
        result.refs.push_back(ref);
      }
    } catch (const DataError& e) {
      result.errors.push_back({ref, e.what()});
    }
  }
  return result;
}

namespace {

bool console_confirm(const fs::path& dir) {
  std::cout << "Create directory " << dir.string() << "? [y/N] " << std::flush;
  std::string answer;
  if (!std::getline(std::cin, answer)) return false;
  return !answer.empty() && (answer[0] == 'y' || answer[0] == 'Y');
}

}  // namespace

LayoutResult ensure_layout(const DatasetRef& ref, bool interactive, const ConfirmFn& confirm) {
  LayoutResult result;
  std::vector<fs::path> missing;
  for (const auto& dir : layout::skeleton(ref)) {
    if (!fs::is_directory(dir)) missing.push_back(dir);
  }
  if (interactive) {
    const ConfirmFn& ask = confirm ? confirm : ConfirmFn(console_confirm);
    for (const auto& dir : missing) {
      if (!ask(dir)) {
        result.declined = true;
        return result;
      }
    }
  }
  for (const auto& dir : missing) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    result.created.push_back(dir);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Splits

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

SplitSet make_splits(const ParallelCorpus& raw, const SplitPolicy& policy) {
  raw.validate();
  std::size_t held_out = policy.val_size + policy.test_size;
  if (raw.size() <= held_out) {
    throw DataError("corpus too small: " + std::to_string(raw.size()) + " pairs, need at least " +
                    std::to_string(held_out + 1) + " for val=" + std::to_string(policy.val_size) +
                    " and test=" + std::to_string(policy.test_size));
  }
  std::size_t n = raw.size();
  auto perm = shuffled_indices(n, policy.seed);
  std::size_t train_end = n - held_out;
  std::size_t val_end = train_end + policy.val_size;

  auto take = [&](std::size_t from, std::size_t to) {
    std::vector<std::size_t> part(perm.begin() + static_cast<std::ptrdiff_t>(from),
                                  perm.begin() + static_cast<std::ptrdiff_t>(to));
    std::sort(part.begin(), part.end());
    return raw.select(part);
  };

  SplitSet out;
  out.train = take(0, train_end);
  out.val = take(train_end, val_end);
  out.test = take(val_end, n);
  out.provenance = Provenance::derived_from_raw;
  out.seed = policy.seed;
  return out;
}

SplitSet subset_training(const SplitSet& splits, std::uint64_t limit) {
  if (limit == 0) throw PreconditionError("training-size limit must be at least 1");
  SplitSet out = splits;
  if (limit >= out.train.size()) return out;
  auto n = static_cast<std::ptrdiff_t>(limit);
  out.train.src.erase(out.train.src.begin() + n, out.train.src.end());
  out.train.trg.erase(out.train.trg.begin() + n, out.train.trg.end());
  for (auto& [name, col] : out.train.columns) col.erase(col.begin() + n, col.end());
  return out;
}

namespace {

bool starts_with_tag(std::string_view line, std::string_view tag) {
  if (line.substr(0, tag.size()) != tag) return false;
  return line.size() == tag.size() || line[tag.size()] == ' ' || line[tag.size()] == '\t';
}

std::string strip_tag(std::string_view line, std::string_view tag) {
  std::size_t pos = tag.size();
  while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  return std::string(line.substr(pos));
}

ParallelCorpus filter_corpus(const ParallelCorpus& corpus, const PairFilter& filter,
                             std::string_view split) {
  std::vector<std::size_t> keep;
  auto by_column = [&](const std::string& column, const std::string& value) {
    if (corpus.empty()) return;
    auto it = corpus.columns.find(column);
    if (it == corpus.columns.end())
      throw DataError("filter needs metadata column '" + column + "', missing in split '" +
                      std::string(split) + "'");
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (it->second[i] == value) keep.push_back(i);
  };

  if (const auto* f = std::get_if<LanguageFilter>(&filter)) {
    by_column(f->column, f->code);
    return corpus.select(keep);
  }
  if (const auto* f = std::get_if<DomainFilter>(&filter)) {
    by_column(f->column, f->label);
    return corpus.select(keep);
  }
  const auto& tag = std::get<LeadingTagFilter>(filter);
  if (tag.tag.empty()) throw ConfigError("leading-tag filter needs a non-empty tag");
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (starts_with_tag(corpus.src[i], tag.tag)) keep.push_back(i);
  ParallelCorpus out = corpus.select(keep);
  if (tag.strip)
    for (auto& line : out.src) line = strip_tag(line, tag.tag);
  return out;
}

}  // namespace

SplitSet filter_pairs(const SplitSet& splits, const PairFilter& filter) {
  SplitSet out = splits;
  for (auto name : kSplitNames) out.split(name) = filter_corpus(splits.split(name), filter, name);
  return out;
}

// ---------------------------------------------------------------------------
// Files

ParallelCorpus read_corpus(const fs::path& src, const fs::path& trg) {
  ParallelCorpus c;
  c.src = io::read_lines(src);
  c.trg = io::read_lines(trg);
  if (c.src.size() != c.trg.size())
    throw DataError("misaligned files " + src.string() + " (" + std::to_string(c.src.size()) +
                    " lines) and " + trg.string() + " (" + std::to_string(c.trg.size()) + " lines)");
  return c;
}

namespace {

void read_meta_columns(const fs::path& meta_dir, const std::string& stem, ParallelCorpus& corpus) {
  if (!fs::is_directory(meta_dir)) return;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(meta_dir))
    if (e.is_regular_file() && e.path().stem().string() == stem) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string column = f.extension().string().substr(1);
    corpus.columns[column] = io::read_lines(f);
  }
  corpus.validate();
}

}  // namespace

ParallelCorpus read_raw(const DatasetRef& ref) {
  ParallelCorpus c = read_corpus(layout::raw_file(ref, ref.languages.src),
                                 layout::raw_file(ref, ref.languages.trg));
  read_meta_columns(layout::raw_dir(ref) / "meta", "data", c);
  return c;
}

SplitSet read_splits(const DatasetRef& ref) {
  SplitSet s;
  for (auto name : kSplitNames) {
    auto& c = s.split(name);
    c = read_corpus(layout::split_file(ref, name, ref.languages.src),
                    layout::split_file(ref, name, ref.languages.trg));
    read_meta_columns(layout::splits_dir(ref) / "meta", std::string(name), c);
  }
  fs::path meta = layout::splits_dir(ref) / "splits.json";
  if (fs::is_regular_file(meta)) {
    auto j = io::read_json(meta);
    s.provenance = j.value("provenance", "given_splits") == "derived_from_raw"
                       ? Provenance::derived_from_raw
                       : Provenance::given_splits;
    if (j.contains("seed") && !j["seed"].is_null()) s.seed = j["seed"].get<std::uint64_t>();
  }
  return s;
}

void write_splits(const DatasetRef& ref, const SplitSet& splits) {
  nlohmann::json counts = nlohmann::json::object();
  for (auto name : kSplitNames) {
    const auto& c = splits.split(name);
    c.validate();
    io::write_lines(layout::split_file(ref, name, ref.languages.src), c.src);
    io::write_lines(layout::split_file(ref, name, ref.languages.trg), c.trg);
    for (const auto& [column, values] : c.columns)
      io::write_lines(layout::split_meta_file(ref, name, column), values);
    counts[std::string(name)] = c.size();
  }
  nlohmann::json meta = {
      {"provenance", splits.provenance == Provenance::derived_from_raw ? "derived_from_raw" : "given_splits"},
      {"seed", splits.seed ? nlohmann::json(*splits.seed) : nlohmann::json(nullptr)},
      {"counts", counts},
  };
  if (ref.size.limit) meta["train_limit"] = *ref.size.limit;
  io::write_json(layout::splits_dir(ref) / "splits.json", meta);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const DatasetRef& ref) {
  return {
      {"name", ref.name},
      {"src", ref.languages.src},
      {"trg", ref.languages.trg},
      {"size_label", ref.size.label},
      {"limit", ref.size.limit ? nlohmann::json(*ref.size.limit) : nlohmann::json(nullptr)},
      {"base_path", ref.base_path.string()},
  };
}

DatasetRef dataset_ref_from_json(const nlohmann::json& j) {
  DatasetRef r;
  r.name = j.at("name").get<std::string>();
  r.languages = {j.at("src").get<std::string>(), j.at("trg").get<std::string>()};
  r.size.label = j.at("size_label").get<std::string>();
  if (j.contains("limit") && !j["limit"].is_null()) r.size.limit = j["limit"].get<std::uint64_t>();
  r.base_path = j.value("base_path", "");
  return r;
}

nlohmann::json to_json(const VariantSpec& v) {
  return {
      {"key", v.key()},
      {"dataset", to_json(v.dataset)},
      {"normalization", to_json(v.normalization)},
      {"subword_model", std::string(to_string(v.subword))},
      {"vocab_size", v.vocab_size ? nlohmann::json(*v.vocab_size) : nlohmann::json(nullptr)},
      {"train_limit", v.train_limit ? nlohmann::json(*v.train_limit) : nlohmann::json(nullptr)},
  };
}

VariantSpec variant_from_json(const nlohmann::json& j) {
  VariantSpec v;
  v.dataset = dataset_ref_from_json(j.at("dataset"));
  v.normalization = steps_from_json(j.at("normalization"));
  v.subword = parse_subword_scheme(j.at("subword_model").get<std::string>());
  if (!j.at("vocab_size").is_null()) v.vocab_size = j["vocab_size"].get<std::uint32_t>();
  if (!j.at("train_limit").is_null()) v.train_limit = j["train_limit"].get<std::uint64_t>();
  return v;
}

}  // namespace seqpipe

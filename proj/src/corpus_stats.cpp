#include "seqpipe/corpus_stats.hpp"

#include <algorithm>
#include <map>

#include "seqpipe/error.hpp"
#include "seqpipe/io.hpp"
#include "seqpipe/svg.hpp"
#include "seqpipe/utf8.hpp"

namespace seqpipe {

namespace {

constexpr std::size_t kFreqPlotTokens = 30;

bool uses_whitespace(const TokenizerModel* model) {
  return model == nullptr || model->scheme() == SubwordScheme::none;
}

svg::Value count_value(std::uint64_t n) { return {static_cast<double>(n), std::to_string(n)}; }

nlohmann::json freq_json(const FrequencyTable& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [tok, n] : t) arr.push_back({tok, n});
  return arr;
}

FrequencyTable freq_from_json(const nlohmann::json& j) {
  FrequencyTable t;
  for (const auto& e : j) t.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::uint64_t>());
  return t;
}

nlohmann::json side_json(const SideStats& s) {
  return {
      {"sentence_count", s.sentence_count},
      {"token_count", s.token_count},
      {"min_length", s.min_length},
      {"max_length", s.max_length},
      {"mean_length", s.mean_length},
      {"histogram", s.histogram},
      {"unknowns_per_sentence", s.unknowns_per_sentence},
      {"unknown_sentence_fraction", s.unknown_sentence_fraction},
      {"frequencies", freq_json(s.frequencies)},
  };
}

SideStats side_from_json(const nlohmann::json& j) {
  SideStats s;
  s.sentence_count = j.at("sentence_count").get<std::uint64_t>();
  s.token_count = j.at("token_count").get<std::uint64_t>();
  s.min_length = j.at("min_length").get<std::uint64_t>();
  s.max_length = j.at("max_length").get<std::uint64_t>();
  s.mean_length = j.at("mean_length").get<double>();
  s.histogram = j.at("histogram").get<std::vector<std::uint64_t>>();
  s.unknowns_per_sentence = j.at("unknowns_per_sentence").get<double>();
  s.unknown_sentence_fraction = j.at("unknown_sentence_fraction").get<double>();
  s.frequencies = freq_from_json(j.at("frequencies"));
  return s;
}

}  // namespace

std::string LengthBucket::label() const {
  if (!hi) return std::to_string(lo) + "+";
  if (*hi == lo + 1) return std::to_string(lo);
  return std::to_string(lo) + "-" + std::to_string(*hi - 1);
}

const std::vector<LengthBucket>& length_buckets() {
  static const std::vector<LengthBucket> buckets = [] {
    std::vector<LengthBucket> b;
    for (std::uint64_t i = 0; i < 50; ++i) b.push_back({i, i + 1});
    for (std::uint64_t i = 50; i < 200; i += 10) b.push_back({i, i + 10});
    b.push_back({200, std::nullopt});
    return b;
  }();
  return buckets;
}

std::size_t bucket_index(std::uint64_t length) {
  if (length < 50) return static_cast<std::size_t>(length);
  if (length < 200) return static_cast<std::size_t>(50 + (length - 50) / 10);
  return length_buckets().size() - 1;
}

const SplitStats& DatasetStats::split(std::string_view name) const {
  for (const auto& s : splits)
    if (s.split == name) return s;
  throw Error("no stats for split '" + std::string(name) + "'");
}

FrequencyTable sorted_frequencies(const std::vector<std::pair<std::string, std::uint64_t>>& counts) {
  FrequencyTable t(counts.begin(), counts.end());
  std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return t;
}

SideStats side_stats(const std::vector<std::string>& lines, const TokenizerModel* model) {
  SideStats s;
  s.histogram.assign(length_buckets().size(), 0);
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t unknowns = 0;
  std::uint64_t with_unknown = 0;
  bool first = true;
  for (const auto& line : lines) {
    std::vector<std::string> tokens;
    if (uses_whitespace(model)) {
      tokens = utf8::split_whitespace(line);
    } else {
      auto ids = model->encode(line);
      std::size_t unk = model->count_unknowns(ids);
      unknowns += unk;
      if (unk > 0) ++with_unknown;
      tokens = model->to_pieces(ids);
    }
    std::uint64_t len = tokens.size();
    for (auto& t : tokens) ++counts[std::move(t)];
    ++s.sentence_count;
    s.token_count += len;
    s.min_length = first ? len : std::min(s.min_length, len);
    s.max_length = std::max(s.max_length, len);
    first = false;
    ++s.histogram[bucket_index(len)];
  }
  if (s.sentence_count > 0) {
    auto n = static_cast<double>(s.sentence_count);
    s.mean_length = static_cast<double>(s.token_count) / n;
    s.unknowns_per_sentence = static_cast<double>(unknowns) / n;
    s.unknown_sentence_fraction = static_cast<double>(with_unknown) / n;
  }
  s.frequencies = sorted_frequencies({counts.begin(), counts.end()});
  return s;
}

DatasetStats compute_stats(const SplitSet& splits, SideModels models) {
  if (splits.train.empty()) throw PreconditionError("cannot compute stats: the training split is empty");
  DatasetStats stats;
  for (auto name : kSplitNames) {
    const auto& corpus = splits.split(name);
    stats.splits.push_back({std::string(name), side_stats(corpus.src, models.src),
                            side_stats(corpus.trg, models.trg)});
  }
  const auto& train = stats.splits.front();
  std::map<std::string, std::uint64_t> combined;
  for (const auto& [t, n] : train.src.frequencies) combined[t] += n;
  for (const auto& [t, n] : train.trg.frequencies) combined[t] += n;
  stats.train_frequencies = sorted_frequencies({combined.begin(), combined.end()});
  return stats;
}

DatasetStats compute_stats(const SplitSet& splits, const TokenizerModel* model) {
  return compute_stats(splits, SideModels{model, model});
}

nlohmann::json to_json(const DatasetStats& stats) {
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : stats.splits)
    splits.push_back({{"split", s.split}, {"src", side_json(s.src)}, {"trg", side_json(s.trg)}});
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& b : length_buckets()) buckets.push_back(b.label());
  return {
      {"dataset_id", stats.dataset_id},
      {"variant", stats.variant},
      {"length_buckets", buckets},
      {"splits", splits},
      {"train_frequencies", freq_json(stats.train_frequencies)},
  };
}

DatasetStats stats_from_json(const nlohmann::json& j) {
  DatasetStats stats;
  stats.dataset_id = j.at("dataset_id").get<std::string>();
  stats.variant = j.at("variant").get<std::string>();
  for (const auto& s : j.at("splits"))
    stats.splits.push_back({s.at("split").get<std::string>(), side_from_json(s.at("src")),
                            side_from_json(s.at("trg"))});
  stats.train_frequencies = freq_from_json(j.at("train_frequencies"));
  return stats;
}

void emit_stats(const DatasetStats& stats, const std::filesystem::path& out_dir) {
  io::write_json(out_dir / "stats.json", to_json(stats));

  std::string csv = io::csv_row({"rank", "token", "count"});
  for (std::size_t i = 0; i < stats.train_frequencies.size(); ++i) {
    const auto& [tok, n] = stats.train_frequencies[i];
    csv += io::csv_row({std::to_string(i + 1), tok, std::to_string(n)});
  }
  io::write_file_atomic(out_dir / "token_freq.csv", csv);

  std::string title_suffix = stats.variant.empty() ? stats.dataset_id : stats.dataset_id + " / " + stats.variant;

  svg::BarChart sentences{"Sentences per split: " + title_suffix, "split", "sentences", {}, {}};
  svg::BarChart tokens{"Tokens per split: " + title_suffix, "split", "tokens", {}, {}};
  svg::BarSeries sent_series{"pairs", {}};
  svg::BarSeries src_tokens{"src", {}}, trg_tokens{"trg", {}};
  for (const auto& s : stats.splits) {
    sentences.categories.push_back(s.split);
    tokens.categories.push_back(s.split);
    sent_series.values.push_back(count_value(s.src.sentence_count));
    src_tokens.values.push_back(count_value(s.src.token_count));
    trg_tokens.values.push_back(count_value(s.trg.token_count));
  }
  sentences.series.push_back(std::move(sent_series));
  tokens.series = {std::move(src_tokens), std::move(trg_tokens)};

  const auto& train = stats.split("train");
  svg::BarChart lengths{"Sentence length (train): " + title_suffix, "tokens per sentence", "sentences", {}, {}};
  svg::BarSeries src_len{"src", {}}, trg_len{"trg", {}};
  const auto& buckets = length_buckets();
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    lengths.categories.push_back(buckets[i].label());
    src_len.values.push_back(count_value(train.src.histogram[i]));
    trg_len.values.push_back(count_value(train.trg.histogram[i]));
  }
  lengths.series = {std::move(src_len), std::move(trg_len)};

  svg::BarChart freq{"Token frequency (train, top " + std::to_string(kFreqPlotTokens) + "): " + title_suffix,
                     "token", "count", {}, {}};
  svg::BarSeries freq_series{"count", {}};
  for (std::size_t i = 0; i < stats.train_frequencies.size() && i < kFreqPlotTokens; ++i) {
    freq.categories.push_back(stats.train_frequencies[i].first);
    freq_series.values.push_back(count_value(stats.train_frequencies[i].second));
  }
  freq.series.push_back(std::move(freq_series));

  io::write_file_atomic(out_dir / std::string(kStatsPlots[0]), svg::render(sentences));
  io::write_file_atomic(out_dir / std::string(kStatsPlots[1]), svg::render(tokens));
  io::write_file_atomic(out_dir / std::string(kStatsPlots[2]), svg::render(lengths));
  io::write_file_atomic(out_dir / std::string(kStatsPlots[3]), svg::render(freq));
}

}  // namespace seqpipe

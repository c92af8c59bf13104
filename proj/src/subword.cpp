#include "seqpipe/subword.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "seqpipe/dataset.hpp"
#include "seqpipe/error.hpp"
#include "seqpipe/io.hpp"
#include "seqpipe/utf8.hpp"

namespace seqpipe {

namespace {

constexpr std::uint32_t kByteVocab = kNumSpecials + 256;

std::string byte_display(unsigned char b) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "<0x%02X>", b);
  return buf;
}

std::string replace_all(std::string_view text, std::string_view from, std::string_view to) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = text.find(from, pos);
    if (hit == std::string_view::npos) break;
    out.append(text.substr(pos, hit - pos));
    out.append(to);
    pos = hit + from.size();
  }
  out.append(text.substr(pos));
  return out;
}

std::string_view kind_name(PieceKind k) {
  switch (k) {
    case PieceKind::special: return "special";
    case PieceKind::byte: return "byte";
    case PieceKind::normal: return "normal";
  }
  return "normal";
}

bool is_chunked(SubwordScheme s) {
  switch (s) {
    case SubwordScheme::words:
    case SubwordScheme::words_bytes:
    case SubwordScheme::bpe:
    case SubwordScheme::bpe_bytes:
    case SubwordScheme::unigram:
    case SubwordScheme::unigram_bytes:
      return true;
    default:
      return false;
  }
}

using Counts = std::vector<std::pair<std::string, std::uint64_t>>;

// Sorted by count descending, ties by byte-wise text order.
Counts by_frequency(const std::map<std::string, std::uint64_t>& counts) {
  Counts out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::map<std::string, std::uint64_t> count_chunks(std::span<const std::string> corpus) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& line : corpus) {
    std::string s = line + " ";
    for (auto chunk : subword_detail::pretokenize(s)) ++counts[std::string(chunk)];
  }
  return counts;
}

std::map<std::string, std::uint64_t> count_alphabet(
    const std::vector<std::pair<std::string, std::uint64_t>>& chunks) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& [chunk, n] : chunks)
    for (auto unit : utf8::split_chars(chunk))
      if (subword_detail::is_vocab_char(unit)) counts[std::string(unit)] += n;
  return counts;
}

void check_vocab_size(SubwordScheme scheme, std::uint32_t vocab_size, std::size_t alphabet) {
  std::uint32_t need = minimum_vocab_size(scheme, alphabet);
  if (vocab_size < need) {
    throw ConfigError("vocab size " + std::to_string(vocab_size) + " is smaller than the " +
                      std::to_string(need) + " entries needed by '" + std::string(to_string(scheme)) +
                      "' (4 specials + base alphabet)");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::uint32_t max_size) : max_size_(std::max<std::uint32_t>(max_size, kNumSpecials)) {
  byte_ids_.fill(-1);
  for (auto name : kSpecialTokens) push({std::string(name), 0.0, PieceKind::special});
}

void Vocabulary::push(VocabEntry entry) {
  int id = static_cast<int>(entries_.size());
  std::string shown;
  if (entry.kind == PieceKind::special) {
    shown = entry.text;
  } else if (entry.kind == PieceKind::byte) {
    auto b = static_cast<unsigned char>(entry.text[0]);
    byte_ids_[b] = id;
    shown = byte_display(b);
  } else {
    normal_index_.emplace(entry.text, id);
    shown = replace_all(entry.text, " ", kSpaceMarker);
  }
  display_index_.emplace(std::move(shown), id);
  entries_.push_back(std::move(entry));
}

int Vocabulary::add(std::string text, double score) {
  if (text.empty()) throw Error("cannot add an empty piece");
  if (normal_index_.count(text)) throw Error("duplicate piece '" + text + "'");
  if (full()) throw Error("vocabulary is full (" + std::to_string(max_size_) + " entries)");
  int id = static_cast<int>(entries_.size());
  push({std::move(text), score, PieceKind::normal});
  return id;
}

void Vocabulary::add_byte_pieces(double score) {
  if (entries_.size() + 256 > max_size_) throw Error("no room for byte pieces");
  for (int b = 0; b < 256; ++b) push({std::string(1, static_cast<char>(b)), score, PieceKind::byte});
}

const VocabEntry& Vocabulary::at(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entries_.size())
    throw Error("token id " + std::to_string(id) + " is out of range for a vocabulary of " +
                std::to_string(entries_.size()));
  return entries_[static_cast<std::size_t>(id)];
}

std::optional<int> Vocabulary::find(std::string_view text) const {
  auto it = normal_index_.find(std::string(text));
  if (it == normal_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Vocabulary::byte_id(unsigned char byte) const {
  if (byte_ids_[byte] < 0) return std::nullopt;
  return byte_ids_[byte];
}

std::string Vocabulary::display(int id) const {
  const auto& e = at(id);
  switch (e.kind) {
    case PieceKind::special: return e.text;
    case PieceKind::byte: return byte_display(static_cast<unsigned char>(e.text[0]));
    case PieceKind::normal: return replace_all(e.text, " ", kSpaceMarker);
  }
  return e.text;
}

int Vocabulary::from_display(std::string_view piece) const {
  auto it = display_index_.find(std::string(piece));
  return it == display_index_.end() ? kUnkId : it->second;
}

void Vocabulary::write_file(const fs::path& path) const {
  std::string out = "#vocab unk=" + std::to_string(kUnkId) + " pad=" + std::to_string(kPadId) +
                    " bos=" + std::to_string(kBosId) + " eos=" + std::to_string(kEosId) +
                    " size=" + std::to_string(entries_.size()) +
                    " max_size=" + std::to_string(max_size_) + "\n";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    out += display(static_cast<int>(i));
    out += '\t';
    out += io::format_exact(entries_[i].score);
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

Vocabulary Vocabulary::read_file(const fs::path& path) {
  auto lines = io::read_lines(path);
  if (lines.empty() || lines[0].rfind("#vocab", 0) != 0)
    throw DataError(path.string() + ": missing vocab header");
  std::uint32_t max_size = static_cast<std::uint32_t>(lines.size() - 1);
  if (auto p = lines[0].find("max_size="); p != std::string::npos)
    max_size = static_cast<std::uint32_t>(std::stoul(lines[0].substr(p + 9)));
  Vocabulary v(max_size);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw DataError(path.string() + ": malformed line " + std::to_string(i + 1));
    std::string token = line.substr(0, tab);
    double score = std::stod(line.substr(tab + 1));
    std::size_t id = i - 1;
    if (id < kNumSpecials) {
      if (token != kSpecialTokens[id])
        throw DataError(path.string() + ": special token " + std::to_string(id) + " must be " +
                        std::string(kSpecialTokens[id]));
      continue;
    }
    if (token.size() == 6 && token.rfind("<0x", 0) == 0 && token.back() == '>') {
      auto b = static_cast<unsigned char>(std::stoul(token.substr(3, 2), nullptr, 16));
      v.push({std::string(1, static_cast<char>(b)), score, PieceKind::byte});
    } else {
      v.add(replace_all(token, kSpaceMarker, " "), score);
    }
  }
  return v;
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    std::string piece = e.kind == PieceKind::byte ? display(static_cast<int>(i)) : e.text;
    arr.push_back({{"piece", piece}, {"score", e.score}, {"kind", kind_name(e.kind)}});
  }
  return arr;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j, std::uint32_t max_size) {
  Vocabulary v(max_size);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    std::string kind = e.at("kind").get<std::string>();
    std::string piece = e.at("piece").get<std::string>();
    double score = e.at("score").get<double>();
    if (kind == "special") {
      if (i >= kNumSpecials || piece != kSpecialTokens[i])
        throw DataError("special tokens must come first in fixed order");
      v.entries_[i].score = score;
    } else if (kind == "byte") {
      auto b = static_cast<unsigned char>(std::stoul(piece.substr(3, 2), nullptr, 16));
      v.push({std::string(1, static_cast<char>(b)), score, PieceKind::byte});
    } else {
      v.add(piece, score);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Pre-tokenization

namespace subword_detail {

std::vector<std::string_view> pretokenize(std::string_view s) {
  std::vector<std::string_view> chunks;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == ' ') {
      chunks.push_back(s.substr(i, 1));
      ++i;
      continue;
    }
    std::size_t j = s.find(' ', i);
    if (j == std::string_view::npos) {
      // Only reachable when the caller did not append the marker space.
      chunks.push_back(s.substr(i));
      break;
    }
    chunks.push_back(s.substr(i, j + 1 - i));
    i = j + 1;
  }
  return chunks;
}

bool is_vocab_char(std::string_view unit) {
  bool valid = false;
  if (unit.empty() || utf8::unit_length(unit, 0, &valid) != unit.size() || !valid) return false;
  char32_t cp = utf8::decode(unit);
  if (cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp < 0xA0)) return false;
  if (cp == 0x2581) return false;
  return true;
}

}  // namespace subword_detail

// ---------------------------------------------------------------------------
// Training

std::uint32_t minimum_vocab_size(SubwordScheme scheme, std::size_t alphabet_size) {
  if (has_byte_fallback(scheme) || scheme == SubwordScheme::bytes) return kByteVocab;
  switch (scheme) {
    case SubwordScheme::none: return kNumSpecials;
    case SubwordScheme::words:
    case SubwordScheme::chars: return kNumSpecials + 1;
    default: return static_cast<std::uint32_t>(kNumSpecials + std::max<std::size_t>(alphabet_size, 1));
  }
}

TokenizerModel train_tokenizer(SubwordScheme scheme, std::optional<std::uint32_t> vocab_size,
                               std::span<const std::string> corpus, const TrainOptions& options) {
  using namespace subword_detail;
  if (corpus.empty()) throw DataError("cannot train a tokenizer on an empty corpus");
  if (requires_vocab_size(scheme) && !vocab_size)
    throw ConfigError("subword model '" + std::string(to_string(scheme)) + "' needs a vocab size");

  TokenizerModel m;
  m.scheme_ = scheme;
  m.byte_fallback_ = has_byte_fallback(scheme);

  switch (scheme) {
    case SubwordScheme::none:
      m.vocab_ = Vocabulary(kNumSpecials);
      break;

    case SubwordScheme::bytes:
      if (vocab_size) check_vocab_size(scheme, *vocab_size, 0);
      m.vocab_ = Vocabulary(kByteVocab);
      m.vocab_.add_byte_pieces(0.0);
      break;

    case SubwordScheme::words:
    case SubwordScheme::words_bytes: {
      check_vocab_size(scheme, *vocab_size, 0);
      m.vocab_ = Vocabulary(*vocab_size);
      if (m.byte_fallback_) m.vocab_.add_byte_pieces(0.0);
      auto counts = count_chunks(corpus);
      std::uint64_t total = 0;
      for (const auto& [c, n] : counts) total += n;
      for (const auto& [chunk, n] : by_frequency(counts)) {
        if (m.vocab_.full()) break;
        bool ok = true;
        for (auto unit : utf8::split_chars(chunk)) ok = ok && is_vocab_char(unit);
        if (!ok) continue;
        m.vocab_.add(chunk, std::log(static_cast<double>(n) / static_cast<double>(total)));
      }
      break;
    }

    case SubwordScheme::chars:
    case SubwordScheme::chars_bytes: {
      check_vocab_size(scheme, *vocab_size, 0);
      m.vocab_ = Vocabulary(*vocab_size);
      if (m.byte_fallback_) m.vocab_.add_byte_pieces(0.0);
      std::map<std::string, std::uint64_t> counts;
      std::uint64_t total = 0;
      for (const auto& line : corpus)
        for (auto unit : utf8::split_chars(line))
          if (is_vocab_char(unit)) {
            ++counts[std::string(unit)];
            ++total;
          }
      for (const auto& [ch, n] : by_frequency(counts)) {
        if (m.vocab_.full()) break;
        m.vocab_.add(ch, std::log(static_cast<double>(n) / static_cast<double>(total)));
      }
      break;
    }

    case SubwordScheme::bpe:
    case SubwordScheme::bpe_bytes: {
      auto chunk_map = count_chunks(corpus);
      Counts chunks(chunk_map.begin(), chunk_map.end());
      auto alphabet = by_frequency(count_alphabet(chunks));
      check_vocab_size(scheme, *vocab_size, alphabet.size());
      m.vocab_ = Vocabulary(*vocab_size);
      if (m.byte_fallback_) m.vocab_.add_byte_pieces(0.0);
      for (const auto& [ch, n] : alphabet) {
        if (m.vocab_.full()) break;
        m.vocab_.add(ch, 0.0);
      }
      auto result = learn_bpe(chunks, m.vocab_);
      m.merges_ = std::move(result.merges);
      break;
    }

    case SubwordScheme::unigram:
    case SubwordScheme::unigram_bytes: {
      auto chunk_map = count_chunks(corpus);
      Counts chunks(chunk_map.begin(), chunk_map.end());
      auto alphabet_counts = by_frequency(count_alphabet(chunks));
      check_vocab_size(scheme, *vocab_size, alphabet_counts.size());
      m.vocab_ = Vocabulary(*vocab_size);
      std::size_t reserved = kNumSpecials + (m.byte_fallback_ ? 256 : 0);
      std::size_t target = *vocab_size - reserved;
      std::vector<std::string> alphabet;
      for (const auto& [ch, n] : alphabet_counts) {
        if (alphabet.size() >= target) break;
        alphabet.push_back(ch);
      }
      auto pieces = learn_unigram(chunks, alphabet, target, options.unigram);
      double min_lp = 0.0;
      for (const auto& p : pieces) min_lp = std::min(min_lp, p.log_prob);
      m.byte_log_prob_ = min_lp - options.unigram.byte_floor_margin;
      m.unk_log_prob_ = min_lp - options.unigram.byte_floor_margin;
      if (m.byte_fallback_) m.vocab_.add_byte_pieces(m.byte_log_prob_);
      for (const auto& p : pieces) m.vocab_.add(p.text, p.log_prob);
      break;
    }
  }
  m.rebuild_indexes();
  return m;
}

TokenizerModel train_tokenizer(const VariantSpec& variant, std::span<const std::string> corpus,
                               const TrainOptions& options) {
  TokenizerModel m = train_tokenizer(variant.subword, variant.vocab_size, corpus, options);
  m.set_normalization(variant.normalization);
  return m;
}

// ---------------------------------------------------------------------------
// Encoding

void TokenizerModel::rebuild_indexes() {
  merge_rank_.clear();
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    std::string key = merges_[i].left;
    key += '\0';
    key += merges_[i].right;
    merge_rank_.emplace(std::move(key), static_cast<int>(i));
  }
  max_piece_chars_ = 1;
  for (const auto& e : vocab_.entries())
    if (e.kind == PieceKind::normal) max_piece_chars_ = std::max(max_piece_chars_, utf8::char_count(e.text));
}

void TokenizerModel::append_fallback(std::string_view unit, std::vector<int>& out) const {
  if (byte_fallback_) {
    for (char c : unit) out.push_back(*vocab_.byte_id(static_cast<unsigned char>(c)));
  } else {
    out.push_back(kUnkId);
  }
}

std::vector<int> TokenizerModel::encode(std::string_view text) const {
  std::vector<int> ids;
  switch (scheme_) {
    case SubwordScheme::none:
      throw UnsupportedOperation("subword model 'none' does not encode; tokenization happens downstream");

    case SubwordScheme::bytes:
      for (char c : text) ids.push_back(*vocab_.byte_id(static_cast<unsigned char>(c)));
      return ids;

    case SubwordScheme::chars:
    case SubwordScheme::chars_bytes:
      for (auto unit : utf8::split_chars(text)) {
        if (auto id = vocab_.find(unit)) {
          ids.push_back(*id);
        } else {
          append_fallback(unit, ids);
        }
      }
      return ids;

    default:
      break;
  }

  // No marker space for an empty sentence: it has no words to end.
  if (text.empty()) return ids;
  std::string s(text);
  s += ' ';
  for (auto chunk : subword_detail::pretokenize(s)) {
    if (scheme_ == SubwordScheme::words || scheme_ == SubwordScheme::words_bytes) {
      if (auto id = vocab_.find(chunk)) {
        ids.push_back(*id);
      } else {
        append_fallback(chunk, ids);
      }
    } else if (scheme_ == SubwordScheme::bpe || scheme_ == SubwordScheme::bpe_bytes) {
      auto part = encode_chunk_bpe(chunk);
      ids.insert(ids.end(), part.begin(), part.end());
    } else {
      auto seg = viterbi(chunk);
      ids.insert(ids.end(), seg.ids.begin(), seg.ids.end());
    }
  }
  return ids;
}

std::string TokenizerModel::decode(std::span<const int> ids) const {
  if (scheme_ == SubwordScheme::none)
    throw UnsupportedOperation("subword model 'none' does not decode");
  std::string out;
  for (int id : ids) {
    const auto& e = vocab_.at(id);
    if (e.kind == PieceKind::special) continue;
    out += e.text;
  }
  if (is_chunked(scheme_) && !out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::vector<std::string> TokenizerModel::to_pieces(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(vocab_.display(id));
  return out;
}

std::vector<int> TokenizerModel::from_pieces(std::span<const std::string> pieces) const {
  std::vector<int> out;
  out.reserve(pieces.size());
  for (const auto& p : pieces) out.push_back(vocab_.from_display(p));
  return out;
}

std::string TokenizerModel::encode_line(std::string_view text) const {
  if (scheme_ == SubwordScheme::none) return std::string(text);
  auto pieces = to_pieces(encode(text));
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i) out += ' ';
    out += pieces[i];
  }
  return out;
}

std::string TokenizerModel::decode_line(std::string_view encoded) const {
  if (scheme_ == SubwordScheme::none) return std::string(encoded);
  std::vector<std::string> pieces;
  std::size_t pos = 0;
  while (pos <= encoded.size()) {
    std::size_t sp = encoded.find(' ', pos);
    if (sp == std::string_view::npos) sp = encoded.size();
    if (sp > pos) pieces.emplace_back(encoded.substr(pos, sp - pos));
    pos = sp + 1;
  }
  return decode(from_pieces(pieces));
}

std::size_t TokenizerModel::count_unknowns(std::span<const int> ids) const {
  return static_cast<std::size_t>(std::count(ids.begin(), ids.end(), kUnkId));
}

// ---------------------------------------------------------------------------
// Persistence

nlohmann::json TokenizerModel::to_json() const {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : merges_) merges.push_back({m.left, m.right});
  nlohmann::json j = {
      {"format", "seqpipe-tokenizer/1"},
      {"scheme", std::string(to_string(scheme_))},
      {"byte_fallback", byte_fallback_},
      {"max_size", vocab_.max_size()},
      {"special_ids", {{"unk", kUnkId}, {"pad", kPadId}, {"bos", kBosId}, {"eos", kEosId}}},
      {"normalization", seqpipe::to_json(normalization_)},
      {"vocab", vocab_.to_json()},
      {"merges", merges},
  };
  if (scheme_ == SubwordScheme::unigram || scheme_ == SubwordScheme::unigram_bytes) {
    j["unigram"] = {
        {"byte_log_prob", byte_log_prob_},
        {"unk_log_prob", unk_log_prob_},
        {"note", "byte pieces and <unk> are scored with a floor log-probability below the "
                 "least likely learned piece"},
    };
  }
  return j;
}

TokenizerModel TokenizerModel::from_json(const nlohmann::json& j) {
  TokenizerModel m;
  m.scheme_ = parse_subword_scheme(j.at("scheme").get<std::string>());
  m.byte_fallback_ = j.at("byte_fallback").get<bool>();
  m.vocab_ = Vocabulary::from_json(j.at("vocab"), j.at("max_size").get<std::uint32_t>());
  for (const auto& mg : j.at("merges")) m.merges_.push_back({mg.at(0).get<std::string>(), mg.at(1).get<std::string>()});
  if (j.contains("normalization")) m.normalization_ = steps_from_json(j["normalization"]);
  if (j.contains("unigram")) {
    m.byte_log_prob_ = j["unigram"].at("byte_log_prob").get<double>();
    m.unk_log_prob_ = j["unigram"].at("unk_log_prob").get<double>();
  }
  m.rebuild_indexes();
  return m;
}

void TokenizerModel::save(const fs::path& path) const { io::write_json(path, to_json()); }

TokenizerModel TokenizerModel::load(const fs::path& path) { return from_json(io::read_json(path)); }

TokenizerModel TokenizerModel::unigram_from_pieces(
    const std::vector<std::pair<std::string, double>>& pieces, bool byte_fallback) {
  TokenizerModel m;
  m.scheme_ = byte_fallback ? SubwordScheme::unigram_bytes : SubwordScheme::unigram;
  m.byte_fallback_ = byte_fallback;
  std::uint32_t size = static_cast<std::uint32_t>(kNumSpecials + (byte_fallback ? 256 : 0) + pieces.size());
  m.vocab_ = Vocabulary(size);
  double min_lp = 0.0;
  for (const auto& [text, lp] : pieces) min_lp = std::min(min_lp, lp);
  m.byte_log_prob_ = min_lp - UnigramOptions{}.byte_floor_margin;
  m.unk_log_prob_ = m.byte_log_prob_;
  if (byte_fallback) m.vocab_.add_byte_pieces(m.byte_log_prob_);
  for (const auto& [text, lp] : pieces) m.vocab_.add(text, lp);
  m.rebuild_indexes();
  return m;
}

}  // namespace seqpipe

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqpipe/normalization.hpp"
#include "seqpipe/scheme.hpp"

namespace seqpipe {

namespace fs = std::filesystem;
struct VariantSpec;

inline constexpr int kUnkId = 0;
inline constexpr int kPadId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kNumSpecials = 4;
inline constexpr std::array<std::string_view, kNumSpecials> kSpecialTokens = {"<unk>", "<pad>", "<s>",
                                                                              "</s>"};
/// Display form of the space character in vocab files and encoded text.
inline constexpr std::string_view kSpaceMarker = "▁";

enum class PieceKind : std::uint8_t { special, byte, normal };

struct VocabEntry {
  std::string text;  // raw text for normal pieces, the single raw byte for byte pieces
  double score = 0.0;
  PieceKind kind = PieceKind::normal;
};

/// Dense id <-> token map. Ids 0-3 are always <unk>, <pad>, <s>, </s>.
class Vocabulary {
 public:
  explicit Vocabulary(std::uint32_t max_size = kNumSpecials);

  /// Appends a normal piece. Throws if it is already present or the vocabulary
  /// is full.
  int add(std::string text, double score);
  /// Appends the 256 byte pieces <0x00>..<0xFF>.
  void add_byte_pieces(double score);

  std::size_t size() const { return entries_.size(); }
  std::uint32_t max_size() const { return max_size_; }
  bool full() const { return entries_.size() >= max_size_; }
  const std::vector<VocabEntry>& entries() const { return entries_; }
  const VocabEntry& at(int id) const;

  std::optional<int> find(std::string_view text) const;  // normal pieces only
  std::optional<int> byte_id(unsigned char byte) const;
  bool has_byte_pieces() const { return byte_ids_[0] >= 0; }

  /// Token as written to vocab/encoded files: specials by name, bytes as
  /// <0xNN>, normal pieces with ' ' shown as U+2581.
  std::string display(int id) const;
  /// Inverse of display(); unknown pieces map to <unk>.
  int from_display(std::string_view piece) const;

  void set_score(int id, double score) { entries_.at(static_cast<std::size_t>(id)).score = score; }

  /// `token<TAB>score` per line after one header line naming the special ids.
  void write_file(const fs::path& path) const;
  static Vocabulary read_file(const fs::path& path);

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j, std::uint32_t max_size);

 private:
  void push(VocabEntry entry);

  std::uint32_t max_size_;
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, int> normal_index_;
  std::unordered_map<std::string, int> display_index_;
  std::array<int, 256> byte_ids_;
};

struct Merge {
  std::string left;
  std::string right;
  friend bool operator==(const Merge&, const Merge&) = default;
};

struct UnigramOptions {
  std::size_t max_piece_chars = 6;
  std::uint64_t seed_min_frequency = 2;
  std::size_t seed_size_factor = 8;  // seed vocabulary is capped at factor x target size
  int em_rounds_per_step = 2;
  double prune_fraction = 0.2;
  int final_em_rounds = 2;
  double byte_floor_margin = 10.0;  // byte pieces get (lowest piece log-prob - margin)
};

struct TrainOptions {
  UnigramOptions unigram;
};

struct Segmentation {
  std::vector<int> ids;
  double log_prob = 0.0;
};

class TokenizerModel {
 public:
  TokenizerModel() = default;

  SubwordScheme scheme() const { return scheme_; }
  bool byte_fallback() const { return byte_fallback_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<Merge>& merges() const { return merges_; }
  const std::vector<NormalizationStep>& normalization() const { return normalization_; }
  void set_normalization(std::vector<NormalizationStep> steps) { normalization_ = std::move(steps); }
  double byte_log_prob() const { return byte_log_prob_; }
  double unk_log_prob() const { return unk_log_prob_; }

  /// Text must already be normalized. Throws UnsupportedOperation for scheme none.
  std::vector<int> encode(std::string_view text) const;
  /// Drops specials; throws Error naming the first out-of-range id.
  std::string decode(std::span<const int> ids) const;

  std::vector<std::string> to_pieces(std::span<const int> ids) const;
  std::vector<int> from_pieces(std::span<const std::string> pieces) const;

  /// One encoded line: display pieces joined by single spaces. For scheme none
  /// the text is passed through unchanged.
  std::string encode_line(std::string_view text) const;
  std::string decode_line(std::string_view encoded) const;

  /// Maximum log-probability segmentation of `text` as a single unit (no
  /// pre-splitting). Unigram models only.
  Segmentation viterbi(std::string_view text) const;

  std::size_t count_unknowns(std::span<const int> ids) const;

  nlohmann::json to_json() const;
  static TokenizerModel from_json(const nlohmann::json& j);
  void save(const fs::path& path) const;
  static TokenizerModel load(const fs::path& path);

  /// Builds a unigram model directly from (piece, log-prob) pairs.
  static TokenizerModel unigram_from_pieces(const std::vector<std::pair<std::string, double>>& pieces,
                                            bool byte_fallback);

  friend TokenizerModel train_tokenizer(SubwordScheme, std::optional<std::uint32_t>,
                                        std::span<const std::string>, const TrainOptions&);

 private:
  void rebuild_indexes();
  std::vector<int> encode_chunk_bpe(std::string_view chunk) const;
  void append_fallback(std::string_view unit, std::vector<int>& out) const;

  SubwordScheme scheme_ = SubwordScheme::none;
  bool byte_fallback_ = false;
  Vocabulary vocab_;
  std::vector<Merge> merges_;
  std::vector<NormalizationStep> normalization_;
  double byte_log_prob_ = 0.0;
  double unk_log_prob_ = 0.0;

  std::unordered_map<std::string, int> merge_rank_;
  std::size_t max_piece_chars_ = 1;
};

TokenizerModel train_tokenizer(SubwordScheme scheme, std::optional<std::uint32_t> vocab_size,
                               std::span<const std::string> corpus, const TrainOptions& options = {});
TokenizerModel train_tokenizer(const VariantSpec& variant, std::span<const std::string> corpus,
                               const TrainOptions& options = {});

/// Minimum vocabulary size for a scheme given the corpus alphabet size.
std::uint32_t minimum_vocab_size(SubwordScheme scheme, std::size_t alphabet_size);

namespace subword_detail {

/// Splits `text + " "` into chunks: each run of non-space characters keeps the
/// one space that follows it as its end-of-word marker; further spaces become
/// standalone " " chunks. Concatenating the chunks yields `text + " "`.
std::vector<std::string_view> pretokenize(std::string_view text_with_marker);

/// Characters that may appear inside learned pieces. Control characters,
/// malformed bytes and U+2581 are excluded so they always go through the
/// fallback path.
bool is_vocab_char(std::string_view unit);

struct BpeResult {
  std::vector<Merge> merges;
};

/// Learns merges over chunk counts until the vocabulary is full or no pair
/// occurs at least twice. `vocab` must already hold the base alphabet.
BpeResult learn_bpe(const std::vector<std::pair<std::string, std::uint64_t>>& chunk_counts,
                    Vocabulary& vocab);

struct UnigramPiece {
  std::string text;
  double log_prob;
};

std::vector<UnigramPiece> learn_unigram(
    const std::vector<std::pair<std::string, std::uint64_t>>& chunk_counts,
    const std::vector<std::string>& alphabet, std::size_t target_pieces, const UnigramOptions& options);

}  // namespace subword_detail

}  // namespace seqpipe

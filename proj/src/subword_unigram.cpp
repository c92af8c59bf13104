#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "seqpipe/error.hpp"
#include "seqpipe/subword.hpp"
#include "seqpipe/utf8.hpp"

namespace seqpipe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Byte offsets of the code-point units of `text`, plus the end offset.
std::vector<std::size_t> unit_offsets(std::string_view text) {
  std::vector<std::size_t> off;
  std::size_t pos = 0;
  while (pos < text.size()) {
    off.push_back(pos);
    pos += utf8::unit_length(text, pos);
  }
  off.push_back(text.size());
  return off;
}

// Piece set under training. Single characters are never removed.
class PieceSet {
 public:
  std::vector<std::string> text;
  std::vector<double> log_prob;
  std::vector<bool> single;

  void rebuild() {
    index_.clear();
    max_chars_ = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
      index_.emplace(text[i], static_cast<int>(i));
      max_chars_ = std::max(max_chars_, utf8::char_count(text[i]));
    }
  }
  int find(std::string_view s) const {
    auto it = index_.find(std::string(s));
    return it == index_.end() ? -1 : it->second;
  }
  std::size_t max_chars() const { return max_chars_; }
  std::size_t size() const { return text.size(); }

 private:
  std::unordered_map<std::string, int> index_;
  std::size_t max_chars_ = 1;
};

struct Edge {
  std::size_t from;
  int piece;
};

// Edges ending at each unit boundary, skipping `excluded`.
std::vector<std::vector<Edge>> lattice(const PieceSet& ps, std::string_view s,
                                       const std::vector<std::size_t>& off, int excluded = -1) {
  std::size_t n = off.size() - 1;
  std::vector<std::vector<Edge>> ending(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t len = 1; len <= ps.max_chars() && i + len <= n; ++len) {
      int id = ps.find(s.substr(off[i], off[i + len] - off[i]));
      if (id >= 0 && id != excluded) ending[i + len].push_back({i, id});
    }
  }
  return ending;
}

// Best path as piece ids; empty when no path exists.
std::vector<int> best_path(const PieceSet& ps, std::string_view s, int excluded = -1) {
  auto off = unit_offsets(s);
  std::size_t n = off.size() - 1;
  auto ending = lattice(ps, s, off, excluded);
  std::vector<double> best(n + 1, kNegInf);
  std::vector<Edge> back(n + 1, {0, -1});
  best[0] = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    for (const auto& e : ending[j]) {
      if (best[e.from] == kNegInf) continue;
      double score = best[e.from] + ps.log_prob[static_cast<std::size_t>(e.piece)];
      if (score > best[j]) {
        best[j] = score;
        back[j] = e;
      }
    }
  }
  if (best[n] == kNegInf) return {};
  std::vector<int> path;
  for (std::size_t j = n; j > 0; j = back[j].from) path.push_back(back[j].piece);
  std::reverse(path.begin(), path.end());
  return path;
}

void normalize_counts(PieceSet& ps, const std::vector<double>& expected) {
  double total = 0.0;
  for (double e : expected) total += e;
  for (std::size_t i = 0; i < ps.size(); ++i)
    ps.log_prob[i] = std::log(std::max(expected[i], 1e-6) / total);
}

std::vector<double> expectation(const PieceSet& ps,
                                const std::vector<std::pair<std::string, std::uint64_t>>& segments) {
  std::vector<double> expected(ps.size(), 0.0);
  for (const auto& [s, freq] : segments) {
    auto off = unit_offsets(s);
    std::size_t n = off.size() - 1;
    auto ending = lattice(ps, s, off);
    std::vector<double> alpha(n + 1, kNegInf), beta(n + 1, kNegInf);
    alpha[0] = 0.0;
    for (std::size_t j = 1; j <= n; ++j)
      for (const auto& e : ending[j])
        alpha[j] = log_add(alpha[j], alpha[e.from] + ps.log_prob[static_cast<std::size_t>(e.piece)]);
    beta[n] = 0.0;
    for (std::size_t j = n; j > 0; --j)
      for (const auto& e : ending[j])
        beta[e.from] = log_add(beta[e.from], beta[j] + ps.log_prob[static_cast<std::size_t>(e.piece)]);
    double z = alpha[n];
    if (z == kNegInf) continue;
    for (std::size_t j = 1; j <= n; ++j)
      for (const auto& e : ending[j]) {
        double lp = alpha[e.from] + ps.log_prob[static_cast<std::size_t>(e.piece)] + beta[j] - z;
        expected[static_cast<std::size_t>(e.piece)] += static_cast<double>(freq) * std::exp(lp);
      }
  }
  return expected;
}

void keep_only(PieceSet& ps, const std::vector<bool>& keep) {
  PieceSet out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!keep[i]) continue;
    out.text.push_back(ps.text[i]);
    out.log_prob.push_back(ps.log_prob[i]);
    out.single.push_back(ps.single[i]);
  }
  ps = std::move(out);
  ps.rebuild();
}

}  // namespace

namespace subword_detail {

std::vector<UnigramPiece> learn_unigram(
    const std::vector<std::pair<std::string, std::uint64_t>>& chunk_counts,
    const std::vector<std::string>& alphabet, std::size_t target_pieces, const UnigramOptions& options) {
  std::unordered_set<std::string> alpha_set(alphabet.begin(), alphabet.end());

  // Training segments: maximal runs of alphabet characters inside each chunk.
  std::map<std::string, std::uint64_t> segment_map;
  for (const auto& [chunk, n] : chunk_counts) {
    std::string run;
    for (auto unit : utf8::split_chars(chunk)) {
      if (alpha_set.count(std::string(unit))) {
        run.append(unit);
      } else if (!run.empty()) {
        segment_map[run] += n;
        run.clear();
      }
    }
    if (!run.empty()) segment_map[run] += n;
  }
  std::vector<std::pair<std::string, std::uint64_t>> segments(segment_map.begin(), segment_map.end());

  // Seed: every alphabet character plus frequent substrings.
  std::map<std::string, std::uint64_t> char_freq;
  std::map<std::string, std::uint64_t> sub_freq;
  for (const auto& [s, n] : segments) {
    auto off = unit_offsets(s);
    std::size_t units = off.size() - 1;
    for (std::size_t i = 0; i < units; ++i) {
      char_freq[s.substr(off[i], off[i + 1] - off[i])] += n;
      for (std::size_t len = 2; len <= options.max_piece_chars && i + len <= units; ++len)
        sub_freq[s.substr(off[i], off[i + len] - off[i])] += n;
    }
  }

  std::vector<std::pair<std::string, std::uint64_t>> subs;
  for (const auto& [s, n] : sub_freq)
    if (n >= options.seed_min_frequency) subs.emplace_back(s, n);
  auto weight = [](const std::pair<std::string, std::uint64_t>& p) {
    return p.second * utf8::char_count(p.first);
  };
  std::stable_sort(subs.begin(), subs.end(), [&](const auto& a, const auto& b) { return weight(a) > weight(b); });
  std::size_t cap = options.seed_size_factor * target_pieces;
  if (subs.size() > cap) subs.resize(cap);

  PieceSet ps;
  double total = 0.0;
  for (const auto& ch : alphabet) total += static_cast<double>(char_freq[ch]);
  for (const auto& [s, n] : subs) total += static_cast<double>(n);
  for (const auto& ch : alphabet) {
    if (ps.size() >= target_pieces) break;
    ps.text.push_back(ch);
    ps.log_prob.push_back(std::log(std::max<double>(static_cast<double>(char_freq[ch]), 1.0) / total));
    ps.single.push_back(true);
  }
  std::size_t singles = ps.size();
  if (singles < target_pieces) {
    for (const auto& [s, n] : subs) {
      ps.text.push_back(s);
      ps.log_prob.push_back(std::log(static_cast<double>(n) / total));
      ps.single.push_back(false);
    }
  }
  ps.rebuild();

  auto run_em = [&](int rounds) {
    std::vector<double> expected;
    for (int r = 0; r < rounds; ++r) {
      expected = expectation(ps, segments);
      normalize_counts(ps, expected);
    }
    return expected;
  };

  while (ps.size() > target_pieces) {
    auto expected = run_em(options.em_rounds_per_step);
    std::size_t excess = ps.size() - target_pieces;

    // Drop pieces the model has stopped using.
    std::vector<std::size_t> unused;
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (!ps.single[i] && expected[i] < 0.5) unused.push_back(i);
    if (!unused.empty()) {
      std::stable_sort(unused.begin(), unused.end(),
                       [&](std::size_t a, std::size_t b) { return expected[a] < expected[b]; });
      std::vector<bool> keep(ps.size(), true);
      for (std::size_t k = 0; k < unused.size() && k < excess; ++k) keep[unused[k]] = false;
      keep_only(ps, keep);
      if (ps.size() <= target_pieces) break;
      excess = ps.size() - target_pieces;
    }

    // Loss of removing each multi-character piece: how much likelihood the
    // best segmentation loses when it must use the next-best split instead.
    std::vector<double> viterbi_freq(ps.size(), 0.0);
    for (const auto& [s, n] : segments)
      for (int id : best_path(ps, s)) viterbi_freq[static_cast<std::size_t>(id)] += static_cast<double>(n);

    std::vector<std::pair<double, std::size_t>> losses;
    std::size_t multi = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (ps.single[i]) continue;
      ++multi;
      double loss = 0.0;
      if (viterbi_freq[i] > 0.0) {
        double alt = 0.0;
        for (int id : best_path(ps, ps.text[i], static_cast<int>(i)))
          alt += ps.log_prob[static_cast<std::size_t>(id)];
        loss = viterbi_freq[i] * (ps.log_prob[i] - alt);
      }
      losses.emplace_back(loss, i);
    }
    std::stable_sort(losses.begin(), losses.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return ps.text[a.second] > ps.text[b.second];
    });
    std::size_t remove = static_cast<std::size_t>(std::ceil(options.prune_fraction * static_cast<double>(multi)));
    remove = std::clamp<std::size_t>(remove, 1, excess);
    std::vector<bool> keep(ps.size(), true);
    for (std::size_t k = 0; k < remove && k < losses.size(); ++k) keep[losses[k].second] = false;
    keep_only(ps, keep);
  }
  run_em(options.final_em_rounds);

  std::vector<UnigramPiece> out;
  for (std::size_t i = 0; i < ps.size(); ++i) out.push_back({ps.text[i], ps.log_prob[i]});
  std::stable_sort(out.begin(), out.end(), [](const UnigramPiece& a, const UnigramPiece& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.text < b.text;
  });
  return out;
}

}  // namespace subword_detail

Segmentation TokenizerModel::viterbi(std::string_view text) const {
  if (scheme_ != SubwordScheme::unigram && scheme_ != SubwordScheme::unigram_bytes)
    throw UnsupportedOperation("viterbi segmentation needs a unigram model");

  auto off = unit_offsets(text);
  std::size_t n = off.size() - 1;
  struct Back {
    std::size_t from = 0;
    int piece = -1;  // -1: fallback for one unit
  };
  std::vector<double> best(n + 1, kNegInf);
  std::vector<Back> back(n + 1);
  best[0] = 0.0;

  auto fallback_score = [&](std::size_t i) {
    if (byte_fallback_) return static_cast<double>(off[i + 1] - off[i]) * byte_log_prob_;
    return unk_log_prob_;
  };

  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t lo = j > max_piece_chars_ ? j - max_piece_chars_ : 0;
    for (std::size_t i = lo; i < j; ++i) {
      if (best[i] == kNegInf) continue;
      auto piece = vocab_.find(text.substr(off[i], off[j] - off[i]));
      if (piece) {
        double score = best[i] + vocab_.at(*piece).score;
        if (score > best[j]) {
          best[j] = score;
          back[j] = {i, *piece};
        }
      } else if (j == i + 1) {
        double score = best[i] + fallback_score(i);
        if (score > best[j]) {
          best[j] = score;
          back[j] = {i, -1};
        }
      }
    }
  }

  std::vector<std::pair<std::size_t, int>> path;
  for (std::size_t j = n; j > 0; j = back[j].from) path.emplace_back(back[j].from, back[j].piece);
  std::reverse(path.begin(), path.end());

  Segmentation seg;
  seg.log_prob = best[n];
  for (auto [from, piece] : path) {
    if (piece >= 0) {
      seg.ids.push_back(piece);
    } else {
      append_fallback(text.substr(off[from], off[from + 1] - off[from]), seg.ids);
    }
  }
  return seg;
}

}  // namespace seqpipe

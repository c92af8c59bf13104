#include <map>
#include <set>
#include <unordered_map>

#include "seqpipe/subword.hpp"
#include "seqpipe/utf8.hpp"

namespace seqpipe {

namespace subword_detail {

namespace {

using SymbolPair = std::pair<int, int>;

struct PairHash {
  std::size_t operator()(const SymbolPair& p) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.first)) << 32) |
                                      static_cast<std::uint32_t>(p.second));
  }
};

class SymbolTable {
 public:
  int intern(const std::string& s) {
    auto [it, inserted] = ids_.emplace(s, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(s);
    return it->second;
  }
  const std::string& name(int id) const { return names_[static_cast<std::size_t>(id)]; }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
};

}  // namespace

BpeResult learn_bpe(const std::vector<std::pair<std::string, std::uint64_t>>& chunk_counts,
                    Vocabulary& vocab) {
  SymbolTable table;
  constexpr int kBarrier = -1;

  std::vector<std::vector<int>> words;
  std::vector<std::uint64_t> freq;
  words.reserve(chunk_counts.size());
  for (const auto& [chunk, n] : chunk_counts) {
    std::vector<int> syms;
    for (auto unit : utf8::split_chars(chunk)) {
      std::string u(unit);
      syms.push_back(vocab.find(u) ? table.intern(u) : kBarrier);
    }
    words.push_back(std::move(syms));
    freq.push_back(n);
  }

  std::unordered_map<SymbolPair, std::uint64_t, PairHash> counts;
  std::unordered_map<SymbolPair, std::set<std::size_t>, PairHash> where;

  // Highest count first; ties broken by the byte order of (left, right).
  auto before = [&table](const std::pair<std::uint64_t, SymbolPair>& a,
                         const std::pair<std::uint64_t, SymbolPair>& b) {
    if (a.first != b.first) return a.first > b.first;
    const auto& al = table.name(a.second.first);
    const auto& bl = table.name(b.second.first);
    if (al != bl) return al < bl;
    return table.name(a.second.second) < table.name(b.second.second);
  };
  std::set<std::pair<std::uint64_t, SymbolPair>, decltype(before)> queue(before);

  auto adjust = [&](const SymbolPair& p, std::int64_t delta, std::size_t word) {
    auto& c = counts[p];
    if (c > 0) queue.erase({c, p});
    c = static_cast<std::uint64_t>(static_cast<std::int64_t>(c) + delta);
    if (c > 0) queue.insert({c, p});
    if (delta > 0) where[p].insert(word);
  };

  auto for_each_pair = [&](std::size_t w, auto&& fn) {
    const auto& s = words[w];
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      if (s[i] != kBarrier && s[i + 1] != kBarrier) fn(SymbolPair{s[i], s[i + 1]});
  };

  for (std::size_t w = 0; w < words.size(); ++w) {
    auto n = static_cast<std::int64_t>(freq[w]);
    for_each_pair(w, [&](const SymbolPair& p) { adjust(p, n, w); });
  }

  BpeResult result;
  while (!vocab.full() && !queue.empty()) {
    auto [count, best] = *queue.begin();
    if (count < 2) break;
    const std::string left = table.name(best.first);
    const std::string right = table.name(best.second);
    const std::string merged = left + right;
    int merged_id = table.intern(merged);
    int rank = static_cast<int>(result.merges.size());
    result.merges.push_back({left, right});
    if (!vocab.find(merged)) vocab.add(merged, -static_cast<double>(rank + 1));

    // `where` may list words that no longer hold the pair; they rewrite to themselves.
    std::vector<std::size_t> affected(where[best].begin(), where[best].end());
    for (std::size_t w : affected) {
      auto n = static_cast<std::int64_t>(freq[w]);
      for_each_pair(w, [&](const SymbolPair& p) { adjust(p, -n, w); });
      auto& s = words[w];
      std::vector<int> out;
      out.reserve(s.size());
      for (std::size_t i = 0; i < s.size();) {
        if (i + 1 < s.size() && s[i] == best.first && s[i + 1] == best.second) {
          out.push_back(merged_id);
          i += 2;
        } else {
          out.push_back(s[i]);
          ++i;
        }
      }
      s = std::move(out);
      for_each_pair(w, [&](const SymbolPair& p) { adjust(p, n, w); });
    }
  }
  return result;
}

}  // namespace subword_detail

std::vector<int> TokenizerModel::encode_chunk_bpe(std::string_view chunk) const {
  std::vector<std::string> syms;
  for (auto unit : utf8::split_chars(chunk)) syms.emplace_back(unit);

  std::string key;
  while (syms.size() > 1) {
    int best_rank = -1;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      key = syms[i];
      key += '\0';
      key += syms[i + 1];
      auto it = merge_rank_.find(key);
      if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank)) best_rank = it->second;
    }
    if (best_rank < 0) break;
    const Merge& m = merges_[static_cast<std::size_t>(best_rank)];
    std::vector<std::string> out;
    out.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size();) {
      if (i + 1 < syms.size() && syms[i] == m.left && syms[i + 1] == m.right) {
        out.push_back(m.left + m.right);
        i += 2;
      } else {
        out.push_back(std::move(syms[i]));
        ++i;
      }
    }
    syms = std::move(out);
  }

  std::vector<int> ids;
  for (const auto& s : syms) {
    if (auto id = vocab_.find(s)) {
      ids.push_back(*id);
    } else {
      append_fallback(s, ids);
    }
  }
  return ids;
}

}  // namespace seqpipe

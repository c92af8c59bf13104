#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "seqpipe/subword.hpp"

namespace oracle {

using seqpipe::Merge;

inline const std::vector<std::string> kBpeCorpus = {"low", "lower", "newest", "widest"};

// Textbook BPE: recount every adjacent pair after each merge, take the most
// frequent one (ties: smallest (left, right)), stop below two occurrences.
inline std::vector<Merge> naive_bpe(const std::vector<std::string>& words, std::size_t max_merges) {
  std::vector<std::vector<std::string>> seqs;
  for (const auto& w : words) {
    std::vector<std::string> s;
    for (char c : w + " ") s.emplace_back(1, c);
    seqs.push_back(s);
  }
  std::vector<Merge> merges;
  while (merges.size() < max_merges) {
    std::map<std::pair<std::string, std::string>, int> counts;
    for (const auto& s : seqs)
      for (std::size_t i = 0; i + 1 < s.size(); ++i) ++counts[{s[i], s[i + 1]}];
    std::pair<std::string, std::string> best;
    int best_count = 0;
    for (const auto& [p, c] : counts)
      if (c > best_count) best = p, best_count = c;
    if (best_count < 2) break;
    merges.push_back({best.first, best.second});
    for (auto& s : seqs) {
      std::vector<std::string> out;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == best.first && s[i + 1] == best.second) {
          out.push_back(s[i] + s[i + 1]);
          ++i;
        } else {
          out.push_back(s[i]);
        }
      }
      s = out;
    }
  }
  return merges;
}

// Best total log-probability over every segmentation of an ASCII text.
inline double brute_force_best(const std::map<std::string, double>& pieces, const std::string& text) {
  // Enumerate all 2^(n-1) cut sets over characters (ASCII-only texts here).
  std::size_t n = text.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    double total = 0.0;
    std::size_t start = 0;
    bool ok = true;
    for (std::size_t i = 1; i <= n && ok; ++i) {
      if (i == n || (mask >> (i - 1) & 1u)) {
        auto it = pieces.find(text.substr(start, i - start));
        if (it == pieces.end()) ok = false;
        else total += it->second;
        start = i;
      }
    }
    if (ok) best = std::max(best, total);
  }
  return best;
}

}  // namespace oracle

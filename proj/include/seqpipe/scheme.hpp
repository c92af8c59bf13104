#pragma once

#include <array>
#include <string_view>

namespace seqpipe {

enum class SubwordScheme {
  bytes,
  chars,
  chars_bytes,
  unigram,
  unigram_bytes,
  bpe,
  bpe_bytes,
  words,
  words_bytes,
  none,
};

inline constexpr std::array<SubwordScheme, 10> kAllSchemes = {
    SubwordScheme::bytes,   SubwordScheme::chars,         SubwordScheme::chars_bytes,
    SubwordScheme::unigram, SubwordScheme::unigram_bytes, SubwordScheme::bpe,
    SubwordScheme::bpe_bytes, SubwordScheme::words,       SubwordScheme::words_bytes,
    SubwordScheme::none,
};

/// Config spelling: "bytes", "chars+bytes", "unigram+bytes", ...
std::string_view to_string(SubwordScheme scheme);
SubwordScheme parse_subword_scheme(std::string_view name);

/// True for the "+bytes" schemes. Plain `bytes` is not a fallback scheme; it
/// is byte-level throughout.
bool has_byte_fallback(SubwordScheme scheme);

/// Every scheme except `bytes` and `none` needs an explicit vocabulary size.
bool requires_vocab_size(SubwordScheme scheme);

}  // namespace seqpipe

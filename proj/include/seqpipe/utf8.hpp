#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace seqpipe::utf8 {

/// Byte length of the code point starting at `pos`. Malformed sequences are
/// reported as length 1 with `valid` set to false, so every byte string splits
/// into units whose concatenation is the input.
std::size_t unit_length(std::string_view text, std::size_t pos, bool* valid = nullptr);

/// Splits text into code-point units (malformed bytes become 1-byte units).
std::vector<std::string_view> split_chars(std::string_view text);

/// Decodes one unit; returns U+FFFD for malformed units.
char32_t decode(std::string_view unit);

std::string encode(char32_t cp);

std::size_t char_count(std::string_view text);

/// Splits on runs of ASCII/Unicode whitespace, dropping empties.
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace seqpipe::utf8

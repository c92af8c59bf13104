#include "seqpipe/utf8.hpp"

#include <unicode/uchar.h>

namespace seqpipe::utf8 {

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::size_t unit_length(std::string_view text, std::size_t pos, bool* valid) {
  auto c = static_cast<unsigned char>(text[pos]);
  std::size_t need = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if (c < 0x80) {
    if (valid) *valid = true;
    return 1;
  } else if ((c & 0xE0) == 0xC0) {
    need = 1;
    cp = c & 0x1F;
    min = 0x80;
  } else if ((c & 0xF0) == 0xE0) {
    need = 2;
    cp = c & 0x0F;
    min = 0x800;
  } else if ((c & 0xF8) == 0xF0) {
    need = 3;
    cp = c & 0x07;
    min = 0x10000;
  } else {
    if (valid) *valid = false;
    return 1;
  }
  if (pos + need >= text.size()) {
    if (valid) *valid = false;
    return 1;
  }
  for (std::size_t i = 1; i <= need; ++i) {
    auto cc = static_cast<unsigned char>(text[pos + i]);
    if (!is_continuation(cc)) {
      if (valid) *valid = false;
      return 1;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  bool ok = cp >= min && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
  if (valid) *valid = ok;
  return ok ? need + 1 : 1;
}

std::vector<std::string_view> split_chars(std::string_view text) {
  std::vector<std::string_view> out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t len = unit_length(text, pos);
    out.push_back(text.substr(pos, len));
    pos += len;
  }
  return out;
}

char32_t decode(std::string_view unit) {
  if (unit.empty()) return 0xFFFD;
  bool valid = false;
  std::size_t len = unit_length(unit, 0, &valid);
  if (!valid || len != unit.size()) return 0xFFFD;
  auto c = static_cast<unsigned char>(unit[0]);
  if (len == 1) return c;
  char32_t cp = len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
  for (std::size_t i = 1; i < len; ++i) cp = (cp << 6) | (static_cast<unsigned char>(unit[i]) & 0x3F);
  return cp;
}

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::size_t char_count(std::string_view text) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    pos += unit_length(text, pos);
    ++n;
  }
  return n;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t len = unit_length(text, pos);
    std::string_view unit = text.substr(pos, len);
    if (u_isUWhiteSpace(static_cast<UChar32>(decode(unit)))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current += unit;
    }
    pos += len;
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

}  // namespace seqpipe::utf8

#include "seqpipe/normalization.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "seqpipe/error.hpp"

namespace seqpipe {

namespace {

struct KindName {
  NormalizationKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {NormalizationKind::nfd, "nfd"},
    {NormalizationKind::nfc, "nfc"},
    {NormalizationKind::nfkd, "nfkd"},
    {NormalizationKind::nfkc, "nfkc"},
    {NormalizationKind::strip, "strip"},
    {NormalizationKind::strip_accents, "strip_accents"},
    {NormalizationKind::lowercase, "lowercase"},
    {NormalizationKind::replace, "replace"},
};

const icu::Normalizer2& normalizer_for(NormalizationKind kind) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = nullptr;
  switch (kind) {
    case NormalizationKind::nfd: n = icu::Normalizer2::getNFDInstance(status); break;
    case NormalizationKind::nfc: n = icu::Normalizer2::getNFCInstance(status); break;
    case NormalizationKind::nfkd: n = icu::Normalizer2::getNFKDInstance(status); break;
    case NormalizationKind::nfkc: n = icu::Normalizer2::getNFKCInstance(status); break;
    default: break;
  }
  if (U_FAILURE(status) || n == nullptr) throw Error("ICU normalizer unavailable");
  return *n;
}

icu::UnicodeString apply_form(NormalizationKind kind, const icu::UnicodeString& in) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = normalizer_for(kind).normalize(in, status);
  if (U_FAILURE(status)) throw Error(std::string("normalization failed: ") + u_errorName(status));
  return out;
}

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

std::string strip_whitespace(std::string_view text) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  int32_t begin = 0;
  int32_t end = u.length();
  while (begin < end && u_isUWhiteSpace(u.char32At(begin))) begin = u.moveIndex32(begin, 1);
  while (end > begin) {
    int32_t prev = u.moveIndex32(end, -1);
    if (!u_isUWhiteSpace(u.char32At(prev))) break;
    end = prev;
  }
  return to_utf8(u.tempSubStringBetween(begin, end));
}

std::string strip_accents(std::string_view text) {
  icu::UnicodeString u = apply_form(
      NormalizationKind::nfd,
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size()))));
  icu::UnicodeString kept;
  for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) {
    UChar32 c = u.char32At(i);
    if (u_charType(c) != U_NON_SPACING_MARK) kept.append(c);
  }
  return to_utf8(apply_form(NormalizationKind::nfc, kept));
}

std::string replace_literal(std::string_view text, const std::string& pattern,
                            const std::string& replacement) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = text.find(pattern, pos);
    if (hit == std::string_view::npos) break;
    out.append(text.substr(pos, hit - pos));
    out += replacement;
    pos = hit + pattern.size();
  }
  out.append(text.substr(pos));
  return out;
}

}  // namespace

std::string_view to_string(NormalizationKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

NormalizationKind parse_normalization_kind(std::string_view name) {
  for (const auto& kn : kKindNames)
    if (kn.name == name) return kn.kind;
  throw ConfigError("unknown normalization step '" + std::string(name) + "'");
}

nlohmann::json to_json(const std::vector<NormalizationStep>& steps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : steps) {
    if (s.kind == NormalizationKind::replace) {
      arr.push_back({{"kind", "replace"},
                     {"pattern", s.pattern},
                     {"replacement", s.replacement},
                     {"regex", s.regex}});
    } else {
      arr.push_back(std::string(to_string(s.kind)));
    }
  }
  return arr;
}

std::vector<NormalizationStep> steps_from_json(const nlohmann::json& j) {
  std::vector<NormalizationStep> steps;
  for (const auto& item : j) {
    if (item.is_string()) {
      steps.push_back(NormalizationStep::make(parse_normalization_kind(item.get<std::string>())));
    } else {
      NormalizationStep s;
      s.kind = parse_normalization_kind(item.at("kind").get<std::string>());
      s.pattern = item.value("pattern", "");
      s.replacement = item.value("replacement", "");
      s.regex = item.value("regex", false);
      steps.push_back(std::move(s));
    }
  }
  return steps;
}

Normalizer::Normalizer(std::vector<NormalizationStep> steps) : steps_(std::move(steps)) {
  compiled_.resize(steps_.size());
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    if (s.kind != NormalizationKind::replace) continue;
    if (s.pattern.empty()) throw ConfigError("replace step needs a non-empty pattern");
    if (s.regex) {
      try {
        compiled_[i] = std::make_shared<const std::regex>(s.pattern, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw ConfigError("invalid replace pattern '" + s.pattern + "': " + e.what());
      }
    }
  }
}

std::string Normalizer::operator()(std::string_view text) const {
  std::string current(text);
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    switch (s.kind) {
      case NormalizationKind::nfd:
      case NormalizationKind::nfc:
      case NormalizationKind::nfkd:
      case NormalizationKind::nfkc:
        current = to_utf8(apply_form(s.kind, icu::UnicodeString::fromUTF8(current)));
        break;
      case NormalizationKind::strip:
        current = strip_whitespace(current);
        break;
      case NormalizationKind::strip_accents:
        current = strip_accents(current);
        break;
      case NormalizationKind::lowercase: {
        icu::UnicodeString u = icu::UnicodeString::fromUTF8(current);
        u.toLower(icu::Locale::getRoot());
        current = to_utf8(u);
        break;
      }
      case NormalizationKind::replace:
        if (s.regex) {
          current = std::regex_replace(current, *compiled_[i], s.replacement);
        } else {
          current = replace_literal(current, s.pattern, s.replacement);
        }
        break;
    }
  }
  return current;
}

std::vector<std::string> Normalizer::apply_all(const std::vector<std::string>& lines) const {
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back((*this)(l));
  return out;
}

}  // namespace seqpipe

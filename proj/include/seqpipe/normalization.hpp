#pragma once

#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace seqpipe {

enum class NormalizationKind { nfd, nfc, nfkd, nfkc, strip, strip_accents, lowercase, replace };

struct NormalizationStep {
  NormalizationKind kind = NormalizationKind::nfc;
  // replace only
  std::string pattern;
  std::string replacement;
  bool regex = false;

  static NormalizationStep make(NormalizationKind kind) { return {kind, {}, {}, false}; }
  static NormalizationStep literal(std::string pattern, std::string replacement) {
    return {NormalizationKind::replace, std::move(pattern), std::move(replacement), false};
  }
  static NormalizationStep regex_replace(std::string pattern, std::string replacement) {
    return {NormalizationKind::replace, std::move(pattern), std::move(replacement), true};
  }

  friend bool operator==(const NormalizationStep&, const NormalizationStep&) = default;
};

std::string_view to_string(NormalizationKind kind);
/// Accepts the step names used in configs ("nfkc", "strip_accents", ...).
NormalizationKind parse_normalization_kind(std::string_view name);

nlohmann::json to_json(const std::vector<NormalizationStep>& steps);
std::vector<NormalizationStep> steps_from_json(const nlohmann::json& j);

/// A validated, immutable normalization pipeline. Construction fails with
/// ConfigError on an empty replace pattern or an invalid regular expression, so
/// bad configurations are caught once rather than per line.
class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(std::vector<NormalizationStep> steps);

  std::string operator()(std::string_view text) const;
  std::vector<std::string> apply_all(const std::vector<std::string>& lines) const;

  const std::vector<NormalizationStep>& steps() const { return steps_; }

 private:
  std::vector<NormalizationStep> steps_;
  std::vector<std::shared_ptr<const std::regex>> compiled_;  // parallel to steps_
};

inline std::string normalize(const std::vector<NormalizationStep>& steps, std::string_view text) {
  return Normalizer(steps)(text);
}

}  // namespace seqpipe

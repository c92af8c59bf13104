#include <gtest/gtest.h>

#include <random>

#include "seqpipe/error.hpp"
#include "seqpipe/normalization.hpp"
#include "test_util.hpp"

using namespace seqpipe;
using K = NormalizationKind;

namespace {
std::vector<NormalizationStep> steps(std::initializer_list<K> kinds) {
  std::vector<NormalizationStep> out;
  for (auto k : kinds) out.push_back(NormalizationStep::make(k));
  return out;
}
}  // namespace

TEST(Normalization, UnicodeForms) {
  // "é" precomposed vs combining, and the "ﬁ" ligature.
  EXPECT_EQ(normalize(steps({K::nfd}), "\xC3\xA9"), "e\xCC\x81");
  EXPECT_EQ(normalize(steps({K::nfc}), "e\xCC\x81"), "\xC3\xA9");
  EXPECT_EQ(normalize(steps({K::nfkc}), "\xEF\xAC\x81"), "fi");
  EXPECT_EQ(normalize(steps({K::nfc}), "\xEF\xAC\x81"), "\xEF\xAC\x81");
}

TEST(Normalization, StripAccentsLowercaseStrip) {
  EXPECT_EQ(normalize(steps({K::strip_accents}), "Cr\xC3\xA8me Br\xC3\xBBl\xC3\xA9" "e"), "Creme Brulee");
  EXPECT_EQ(normalize(steps({K::lowercase}), "\xC3\x89T\xC3\x89 ABC"), "\xC3\xA9t\xC3\xA9 abc");
  EXPECT_EQ(normalize(steps({K::strip}), "  \t hi there \xE3\x80\x80"), "hi there");
}

TEST(Normalization, ReplaceLiteralAndRegex) {
  std::vector<NormalizationStep> s = {NormalizationStep::literal("&amp;", "&"),
                                      NormalizationStep::regex_replace("[0-9]+", "<num>")};
  EXPECT_EQ(normalize(s, "a &amp; 12 b 7"), "a & <num> b <num>");
}

TEST(Normalization, StepsApplyInOrder) {
  auto a = normalize({NormalizationStep::make(K::lowercase), NormalizationStep::literal("A", "x")}, "A");
  auto b = normalize({NormalizationStep::literal("A", "x"), NormalizationStep::make(K::lowercase)}, "A");
  EXPECT_EQ(a, "a");
  EXPECT_EQ(b, "x");
}

TEST(Normalization, InvalidStepsFailAtConstruction) {
  EXPECT_THROW(Normalizer({NormalizationStep::regex_replace("(", "x")}), ConfigError);
  EXPECT_THROW(Normalizer({NormalizationStep::literal("", "x")}), ConfigError);
  EXPECT_THROW(parse_normalization_kind("titlecase"), ConfigError);
}

TEST(Normalization, EmptyPipelineIsIdentity) {
  std::mt19937_64 rng(5);
  Normalizer n;
  for (int i = 0; i < 200; ++i) {
    auto s = testutil::random_unicode(rng, 30);
    EXPECT_EQ(n(s), s);
  }
}

TEST(Normalization, NormalFormsAreIdempotent) {
  std::mt19937_64 rng(11);
  for (auto k : {K::nfc, K::nfd, K::nfkc, K::nfkd, K::lowercase, K::strip_accents}) {
    Normalizer n(steps({k}));
    for (int i = 0; i < 200; ++i) {
      auto once = n(testutil::random_unicode(rng, 20));
      EXPECT_EQ(n(once), once) << to_string(k);
    }
  }
}

TEST(Normalization, JsonRoundTrip) {
  std::vector<NormalizationStep> s = {NormalizationStep::make(K::nfkc), NormalizationStep::regex_replace("a+", "b")};
  EXPECT_EQ(steps_from_json(to_json(s)), s);
}

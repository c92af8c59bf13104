#include <gtest/gtest.h>

#include "seqpipe/config.hpp"
#include "seqpipe/error.hpp"
#include "test_util.hpp"

using namespace seqpipe;

namespace {

const char* kFull = R"(
base_path = "experiments"
interactive = false
jobs = 4
normalization = ["nfkc", "strip", {replace = "&amp;", with = "&"}, {replace = "[0-9]+", with = "0", regex = true}]

[[datasets]]
name = "scielo"
languages = ["es-en"]
sizes = ["original", "100k"]

[[datasets]]
name = "health"
languages = ["es-en"]
sizes = ["original"]
derive = {from = "scielo", domain = "health"}

[splits]
val_size = 1000
test_size = 2000
seed = 7

[[subword]]
model = "unigram+bytes"
vocab_sizes = [8000, 16000]

[[subword]]
model = "bytes"

[tokenizer]
em_rounds = 3

[training]
translators = ["lexicon", "adapters/fairseq.json"]
epochs = 10
seed = 3
options = {lr = 0.0005, arch = "transformer"}

[evaluation]
metrics = ["bleu", "chrf", "comet"]
bleu_smoothing = "exp"
chrf_word_order = 2
beams = [1, 5]
scope = "own"

[[evaluation.external_metrics]]
name = "comet"
argv = ["./comet.sh", "{INPUT}", "{OUTPUT}"]

[[reports]]
name = "vocab"
type = "multivariable"
y = ["bleu", {variable = "tokens_per_sentence", axis = "right"}]

[[reports]]
name = "toolkits"
type = "comparison"
system_a = "fairseq"
system_b = "lexicon"
)";

ExperimentConfig parse(const std::string& text) { return parse_config(text, "/cfg"); }

// Minimal valid prefix for snippets that exercise one setting.
const std::string kBase = "base_path = \"runs\"\n";

std::string expect_config_error(const std::string& text) {
  SCOPED_TRACE(text);
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected ConfigError";
  return {};
}

}  // namespace

TEST(Config, ParsesEveryStage) {
  auto c = parse(kFull);
  EXPECT_EQ(c.base_path, fs::path("/cfg/experiments"));
  EXPECT_FALSE(c.interactive);
  EXPECT_EQ(c.jobs, 4u);
  ASSERT_EQ(c.normalization.size(), 4u);
  EXPECT_EQ(c.normalization[2], NormalizationStep::literal("&amp;", "&"));
  EXPECT_TRUE(c.normalization[3].regex);

  ASSERT_EQ(c.datasets.size(), 2u);
  EXPECT_EQ(c.datasets[0].decl.sizes[1].limit, 100000u);
  ASSERT_TRUE(c.datasets[1].derive);
  EXPECT_EQ(c.datasets[1].derive->source, "scielo");
  EXPECT_EQ(std::get<DomainFilter>(c.datasets[1].derive->filter).label, "health");

  EXPECT_EQ(c.splits.test_size, 2000u);
  EXPECT_EQ(c.splits.seed, 7u);
  ASSERT_EQ(c.subword.size(), 2u);
  EXPECT_EQ(c.subword[0].vocab_sizes, (std::vector<std::uint32_t>{8000, 16000}));
  EXPECT_TRUE(c.subword[1].vocab_sizes.empty());
  EXPECT_EQ(c.tokenizer.unigram.em_rounds_per_step, 3);

  EXPECT_EQ(c.translators, (std::vector<std::string>{"lexicon", "adapters/fairseq.json"}));
  EXPECT_EQ(c.train.epochs, 10u);
  EXPECT_EQ(c.train.options["arch"], "transformer");

  ASSERT_EQ(c.metrics.size(), 3u);
  EXPECT_EQ(c.metrics[0].bleu.smoothing, BleuSmoothing::exp);
  EXPECT_EQ(c.metrics[1].chrf.word_order, 2);
  ASSERT_TRUE(c.metrics[2].external);
  EXPECT_EQ(c.metrics[2].external->argv[0], "/cfg/./comet.sh");
  EXPECT_EQ(c.beams, (std::vector<std::uint32_t>{1, 5}));
  EXPECT_EQ(c.scope, EvalScope::own);

  ASSERT_EQ(c.reports.size(), 2u);
  const auto* vocab = c.find_report("vocab");
  ASSERT_TRUE(vocab);
  EXPECT_EQ(vocab->type, ReportType::multivariable);
  EXPECT_EQ(vocab->scope, EvalScope::own);
  ASSERT_EQ(vocab->y.size(), 2u);
  EXPECT_EQ(vocab->y[1].axis, AxisSide::right);
  EXPECT_EQ(c.find_report("toolkits")->scope, EvalScope::compatible);
  EXPECT_EQ(c.find_report("nope"), nullptr);
}

TEST(Config, Defaults) {
  auto c = parse(R"(
base_path = "."
[[datasets]]
name = "d"
languages = ["de-en"]
sizes = ["original"]
[[subword]]
model = "bytes"
)");
  EXPECT_TRUE(c.interactive);
  EXPECT_EQ(c.base_path, fs::path("/cfg/."));
  EXPECT_EQ(c.translators, (std::vector<std::string>{"lexicon"}));
  ASSERT_EQ(c.metrics.size(), 2u);
  EXPECT_EQ(c.metrics[0].bleu.smoothing, BleuSmoothing::floor);
  EXPECT_EQ(c.scope, EvalScope::compatible);
  EXPECT_NE(expect_config_error("[[subword]]\nmodel = \"bytes\"").find("base_path"), std::string::npos);
}

TEST(Config, UnknownKeysAreRejectedWithTheirPath) {
  EXPECT_NE(expect_config_error(kBase + "colour = 1").find("'colour'"), std::string::npos);
  EXPECT_NE(expect_config_error(kBase + "[splits]\nval = 1").find("splits.val"), std::string::npos);
  EXPECT_NE(expect_config_error(kBase + "[[datasets]]\nname = \"d\"\nlanguages = [\"de-en\"]\nsizes = [\"original\"]\n"
                                "lang = \"x\"")
                .find("datasets[0].lang"),
            std::string::npos);
}

TEST(Config, InvalidValuesAreRejected) {
  const std::string ds = kBase + "[[datasets]]\nname = \"d\"\nlanguages = [\"de-en\"]\nsizes = [\"original\"]\n";
  expect_config_error(kBase + "jobs = \"four\"");
  expect_config_error(ds + "[[subword]]\nmodel = \"bpe\"");
  expect_config_error(ds + "[[subword]]\nmodel = \"sentencepiece\"\nvocab_sizes = [10]");
  expect_config_error(ds + "[evaluation]\nmetrics = [\"ter\"]");
  expect_config_error(ds + "[evaluation]\nscope = \"all\"");
  expect_config_error(ds + "normalization = [\"titlecase\"]");
  expect_config_error(ds + "normalization = [{replace = \"(\", with = \"x\", regex = true}]");
  expect_config_error(ds + "[[reports]]\nname = \"r\"\ntype = \"pie\"");
  expect_config_error(ds + "[[reports]]\nname = \"r\"\ntype = \"comparison\"");
  expect_config_error(ds + "[[reports]]\nname = \"r\"\ntype = \"multivariable\"\nx = \"translator\"\ny = [\"bleu\"]");
  expect_config_error(ds + "[[datasets]]\nname = \"e\"\nlanguages = [\"de-en\"]\nsizes = [\"original\"]\n"
                           "derive = {from = \"missing\", domain = \"bio\"}");
  expect_config_error(ds + "[[datasets]]\nname = \"d\"\nlanguages = [\"fr-en\"]\nsizes = [\"original\"]");
  expect_config_error(kBase + "[[datasets]]\nname = \"d\"\nlanguages = [\"en-en\"]\nsizes = [\"original\"]");
  expect_config_error("this is not toml");
}

TEST(Config, SameLanguageNeedsFlag) {
  auto c = parse(kBase + "[[datasets]]\nname = \"d\"\nlanguages = [\"en-en\"]\nsizes = [\"original\"]\n"
                 "allow_same_language = true");
  EXPECT_TRUE(c.datasets[0].decl.allow_same_language);
}

TEST(Config, LoadResolvesPathsAgainstTheFile) {
  testutil::TempDir tmp;
  testutil::write_text(tmp / "sub/exp.toml", "base_path = \"../runs\"\n");
  auto c = load_config(tmp / "sub/exp.toml");
  EXPECT_EQ(fs::weakly_canonical(c.base_path), fs::weakly_canonical(tmp / "runs"));
  EXPECT_THROW(load_config(tmp / "missing.toml"), ConfigError);
}

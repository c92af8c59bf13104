#include <gtest/gtest.h>

#include "seqpipe/error.hpp"
#include "seqpipe/io.hpp"
#include "seqpipe/translator.hpp"
#include "seqpipe/variant_store.hpp"
#include "test_util.hpp"

using namespace seqpipe;

namespace {

// A materialized variant over a small synthetic corpus.
VariantSpec make_variant(const fs::path& base, const std::string& name, bool identity_refs = false,
                         SubwordScheme scheme = SubwordScheme::chars_bytes, std::optional<std::uint32_t> vocab = 300) {
  auto c = testutil::synthetic_corpus(5, 200, 20, 20);
  if (identity_refs) c.train_trg = c.train_src, c.val_trg = c.val_src, c.test_trg = c.test_src;
  testutil::write_synthetic(base, name, c);
  VariantSpec v;
  v.dataset = {name, {"xx", "yy"}, {}, base};
  v.subword = scheme;
  v.vocab_size = vocab;
  materialize_variant(v, read_splits(v.dataset));
  return v;
}

fs::path manifest(const std::string& file) { return testutil::data_dir() / file; }

}  // namespace

TEST(Templates, PlaceholdersAndRendering) {
  EXPECT_EQ(placeholders_in("{TRAIN_SRC}:{BEAM}{x}"), (std::vector<std::string>{"TRAIN_SRC", "BEAM"}));
  Bindings b = {{"INPUT", "/in"}, {"BEAM", "5"}};
  EXPECT_EQ(render_text("--in={INPUT} -b {BEAM}", b), "--in=/in -b 5");
  try {
    render_text("{OUTPUT}", b);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("OUTPUT unbound"), std::string::npos);
  }
  CommandTemplate t{"translate", {"tool", "{INPUT}", "{OUTPUT}"}, {}};
  EXPECT_EQ(render_command(t, {{"INPUT", "a b"}, {"OUTPUT", "c"}}), (std::vector<std::string>{"tool", "a b", "c"}));
}

TEST(Templates, ValidationRejectsUnknownPlaceholdersAndMissingOutput) {
  EXPECT_THROW((CommandTemplate{"train", {"tool", "{CHECKPOINT}"}, {}}.validate()), ConfigError);
  EXPECT_THROW((CommandTemplate{"translate", {"tool", "{INPUT}"}, {}}.validate()), ConfigError);
  EXPECT_THROW((CommandTemplate{"train", {}, {}}.validate()), ConfigError);
  EXPECT_NO_THROW((CommandTemplate{"translate", {"tool", "{INPUT}", "{OUTPUT}"}, {}}.validate()));
}

TEST(Manifest, ParsesAndResolvesRelativePrograms) {
  auto m = AdapterManifest::load(manifest("mock_copy.json"));
  EXPECT_EQ(m.name, "mockcopy");
  EXPECT_EQ(m.version, "1.0");
  EXPECT_TRUE(m.capabilities.supports_beam);
  EXPECT_TRUE(fs::path(m.train.argv[0]).is_absolute());
  EXPECT_THROW(AdapterManifest::from_json({{"name", "x"}, {"train", {"a"}}, {"translate", {"a", "{OUTPUT}"}},
                                           {"gpu", true}}),
               ConfigError);
}

TEST(Lexicon, CountsEachPairOnceAndBreaksTiesLexicographically) {
  ParallelCorpus c;
  c.src = {"a a b", "a c", "b"};
  c.trg = {"x y", "x z", "y"};
  auto lex = learn_lexicon(c);
  // a: x twice, y once, z once. b: x once, y twice. c: x and z once each, x wins the tie.
  EXPECT_EQ(lex.at("a"), "x");
  EXPECT_EQ(lex.at("b"), "y");
  EXPECT_EQ(lex.at("c"), "x");
  EXPECT_EQ(translate_with_lexicon(lex, "c  a q"), "x x q");
}

TEST(Lexicon, FileRoundTrip) {
  testutil::TempDir tmp;
  Lexicon lex = {{"a", "x"}, {"\xC3\xA9t\xC3\xA9", "summer"}};
  write_lexicon(tmp / "lex.tsv", lex);
  EXPECT_EQ(read_lexicon(tmp / "lex.tsv"), lex);
}

TEST(Fit, UnmaterializedVariantWritesNothing) {
  testutil::TempDir tmp;
  VariantSpec v;
  v.dataset = {"ghost", {"xx", "yy"}, {}, tmp.path()};
  v.subword = SubwordScheme::bytes;
  IdentityTranslator t;
  EXPECT_THROW(fit(t, v, {}), PreconditionError);
  EXPECT_FALSE(fs::exists(layout::models_root(v.dataset)));
}

TEST(Fit, LexiconRunIsIdempotentUnlessForced) {
  testutil::TempDir tmp;
  auto v = make_variant(tmp.path(), "synth");
  LexiconTranslator t;
  bool reused = true;
  auto first = fit(t, v, {}, {}, &reused);
  EXPECT_FALSE(reused);
  EXPECT_EQ(first.status, RunStatus::trained);
  EXPECT_EQ(first.run_id, "synth_xx-yy_original__lexicon__chars+bytes_300");
  EXPECT_TRUE(fs::exists(run_record_path(first.run_dir)));
  EXPECT_TRUE(fs::exists(first.run_dir / "checkpoints" / "lexicon.tsv"));

  auto second = fit(t, v, {}, {}, &reused);
  EXPECT_TRUE(reused);
  EXPECT_EQ(second.created_at, first.created_at);
  EXPECT_EQ(to_json(load_run(first.run_dir)), to_json(second));

  fit(t, v, {}, FitOptions{true}, &reused);
  EXPECT_FALSE(reused);
}

TEST(Fit, LexiconTranslatesSeenWords) {
  testutil::TempDir tmp;
  auto v = make_variant(tmp.path(), "synth");
  LexiconTranslator t;
  auto run = fit(t, v, {});
  auto out = translate(t, run, {"s1 s2 s75", ""}, {}, tmp / "work");
  EXPECT_EQ(out, (std::vector<std::string>{"t1 t2 s75", ""}));
}

TEST(Fit, IdentityTranslatorReturnsItsInput) {
  testutil::TempDir tmp;
  auto v = make_variant(tmp.path(), "synth");
  IdentityTranslator t;
  auto run = fit(t, v, {});
  std::vector<std::string> src = {"s1 s2", "unseen \xE2\x82\xAC text"};
  EXPECT_EQ(translate(t, run, src, {}, tmp / "work"), src);
}

TEST(External, MockToolkitTrainsAndCopies) {
  testutil::TempDir tmp;
  auto v = make_variant(tmp.path(), "mirror", true);
  auto t = make_translator(manifest("mock_copy.json").string());
  auto run = fit(*t, v, TrainConfig{1, 32, 99, {}});
  ASSERT_EQ(run.status, RunStatus::trained) << (run.failure ? run.failure->message : "");
  EXPECT_EQ(run.translator.kind, "mockcopy");
  EXPECT_EQ(testutil::read_text(run.run_dir / "checkpoints" / "model.bin"), "weights seed=99\n");
  EXPECT_TRUE(fs::exists(run.run_dir / "logs" / "train.log"));
  std::vector<std::string> src = {"s1 s2 s3", "s4"};
  EXPECT_EQ(translate(*t, run, src, {}, tmp / "work"), src);
}

TEST(External, StageFailureIsRecorded) {
  testutil::TempDir tmp;
  auto v = make_variant(tmp.path(), "synth");
  auto t = make_translator(manifest("mock_fail.json").string());
  auto run = fit(*t, v, {});
  EXPECT_EQ(run.status, RunStatus::failed);
  ASSERT_TRUE(run.failure);
  EXPECT_EQ(run.failure->stage, "train");
  EXPECT_EQ(run.failure->exit_code, 1);
  EXPECT_NE(run.failure->log_tail.find("CUDA out of memory"), std::string::npos);
  EXPECT_EQ(load_run(run.run_dir).status, RunStatus::failed);
}

TEST(External, ShortOutputIsAContractViolation) {
  testutil::TempDir tmp;
  auto v = make_variant(tmp.path(), "synth");
  auto t = make_translator(manifest("mock_short.json").string());
  auto run = fit(*t, v, {});
  ASSERT_EQ(run.status, RunStatus::trained);
  EXPECT_THROW(translate(*t, run, {"s1", "s2", "s3"}, {}, tmp / "work"), ContractViolation);
}

TEST(Batch, FailingJobsDoNotStopOthers) {
  testutil::TempDir tmp;
  auto v = make_variant(tmp.path(), "synth");
  VariantSpec ghost = v;
  ghost.dataset.name = "ghost";
  std::vector<FitJob> jobs = {{manifest("mock_fail.json").string(), v},
                              {"lexicon", ghost},
                              {"identity", v},
                              {"lexicon", v}};
  auto outcomes = run_fit_jobs(jobs, {}, {}, 3);
  ASSERT_EQ(outcomes.size(), 4u);
  EXPECT_EQ(outcomes[0].record->status, RunStatus::failed);
  EXPECT_FALSE(outcomes[1].record);
  EXPECT_FALSE(outcomes[1].error.empty());
  EXPECT_EQ(outcomes[2].record->status, RunStatus::trained);
  EXPECT_EQ(outcomes[3].record->status, RunStatus::trained);
}

TEST(Runs, RecordJsonRoundTrip) {
  testutil::TempDir tmp;
  auto v = make_variant(tmp.path(), "synth");
  LexiconTranslator t;
  auto run = fit(t, v, TrainConfig{3, 16, 7, {{"lr", 0.1}}});
  auto back = run_from_json(to_json(run));
  EXPECT_EQ(to_json(back), to_json(run));
  EXPECT_EQ(back.train_config.epochs, 3u);
  EXPECT_EQ(back.variant.key(), v.key());
}

TEST(Decode, ValidatesBeamAndLength) {
  EXPECT_THROW((DecodeConfig{0, 10}.validate()), ConfigError);
  EXPECT_THROW((DecodeConfig{5, 0}.validate()), ConfigError);
  EXPECT_NO_THROW((DecodeConfig{1, 1}.validate()));
}

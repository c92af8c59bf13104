#include <gtest/gtest.h>

#include <sstream>

#include "seqpipe/cli.hpp"
#include "seqpipe/io.hpp"
#include "seqpipe/pipeline.hpp"
#include "seqpipe/process.hpp"
#include "test_util.hpp"

using namespace seqpipe;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the installed binary so exit codes and streams are the real ones.
CliResult seqpipe_cli(const fs::path& work, std::vector<std::string> args, std::map<std::string, std::string> env = {}) {
  args.insert(args.begin(), testutil::cli_binary().string());
  process::Options o;
  o.stdout_path = work / "cli.out";
  o.stderr_path = work / "cli.err";
  o.env = std::move(env);
  auto r = process::run(args, o);
  EXPECT_TRUE(r.spawned) << r.spawn_error;
  return {r.exit_code, testutil::read_text(work / "cli.out"), testutil::read_text(work / "cli.err")};
}

bool contains(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

// Two datasets with the same language pair, given splits on disk.
void write_two_datasets(const fs::path& base) {
  testutil::write_synthetic(base, "alpha", testutil::synthetic_corpus(1, 300, 20, 30));
  testutil::write_synthetic(base, "beta", testutil::synthetic_corpus(2, 300, 20, 30));
}

std::string config_text(const fs::path& base, const std::string& extra = "") {
  return "base_path = \"" + base.string() + "\"\n"
         "interactive = false\n"
         "[[datasets]]\nname = \"alpha\"\nlanguages = [\"xx-yy\"]\nsizes = [\"original\", \"100\"]\n"
         "[[datasets]]\nname = \"beta\"\nlanguages = [\"xx-yy\"]\nsizes = [\"original\"]\n"
         "[[subword]]\nmodel = \"words\"\nvocab_sizes = [200]\n" +
         extra;
}

}  // namespace

TEST(Cli, BuildReportsNewThenExistingVariants) {
  testutil::TempDir tmp;
  write_two_datasets(tmp / "runs");
  testutil::write_text(tmp / "exp.toml", config_text(tmp / "runs"));

  auto first = seqpipe_cli(tmp.path(), {"build", "-c", (tmp / "exp.toml").string()});
  EXPECT_EQ(first.exit_code, 0) << first.out << first.err;
  EXPECT_TRUE(contains(first.out, "summary: 3 variants (3 new variants, 0 already built)")) << first.out;
  EXPECT_TRUE(fs::exists(tmp / "runs/alpha/xx-yy/100/data/splits/train.xx"));
  EXPECT_EQ(io::read_lines(tmp / "runs/alpha/xx-yy/100/data/splits/train.xx").size(), 100u);

  auto again = seqpipe_cli(tmp.path(), {"build", "-c", (tmp / "exp.toml").string()});
  EXPECT_EQ(again.exit_code, 0);
  EXPECT_TRUE(contains(again.out, "(0 new variants, 3 already built)")) << again.out;

  auto forced = seqpipe_cli(tmp.path(), {"build", "-f", "-c", (tmp / "exp.toml").string()});
  EXPECT_EQ(forced.exit_code, 0);
  EXPECT_TRUE(contains(forced.out, "(3 new variants, 0 already built)")) << forced.out;

  auto stats = seqpipe_cli(tmp.path(), {"stats", "-c", (tmp / "exp.toml").string()});
  EXPECT_EQ(stats.exit_code, 0);
  EXPECT_TRUE(contains(stats.out, "alpha_xx-yy_100/words_200/limit=100\t100\t")) << stats.out;
}

TEST(Cli, DuplicateVariantKeysFailBeforeAnyWork) {
  testutil::TempDir tmp;
  write_two_datasets(tmp / "runs");
  testutil::write_text(tmp / "exp.toml", config_text(tmp / "runs", "[[subword]]\nmodel = \"words\"\nvocab_sizes = [200]\n"));
  auto r = seqpipe_cli(tmp.path(), {"build", "-c", (tmp / "exp.toml").string()});
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_TRUE(contains(r.out + r.err, "duplicate variant keys: alpha_xx-yy_100/words_200/limit=100")) << r.out << r.err;
  EXPECT_FALSE(fs::exists(tmp / "runs/alpha/xx-yy/original/vocabs"));
}

TEST(Cli, ConfigProblemsExitWithOne) {
  testutil::TempDir tmp;
  EXPECT_EQ(seqpipe_cli(tmp.path(), {"build", "-c", (tmp / "missing.toml").string()}).exit_code, 1);
  testutil::write_text(tmp / "bad.toml", "base_path = \"runs\"\ncolour = \"blue\"\n");
  auto bad = seqpipe_cli(tmp.path(), {"build", "-c", (tmp / "bad.toml").string()});
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_TRUE(contains(bad.out + bad.err, "colour"));
  EXPECT_EQ(seqpipe_cli(tmp.path(), {"launch"}).exit_code, 1);
  EXPECT_EQ(seqpipe_cli(tmp.path(), {"evaluate", "--scope", "everything"}).exit_code, 1);
}

TEST(Cli, DeclinedLayoutCreatesNothing) {
  testutil::TempDir tmp;
  auto cfg = parse_config(config_text(tmp / "runs"), tmp.path());
  testutil::write_synthetic(tmp / "runs", "alpha", testutil::synthetic_corpus(1, 50, 5, 5));
  testutil::write_synthetic(tmp / "runs", "beta", testutil::synthetic_corpus(2, 50, 5, 5));
  CommandOptions opts;
  opts.interactive = true;
  int asked = 0;
  opts.confirm = [&](const fs::path&) {
    ++asked;
    return false;
  };
  std::ostringstream out;
  EXPECT_EQ(cmd_build(cfg, opts, out), kExitConfigError);
  EXPECT_GE(asked, 1);
  EXPECT_FALSE(fs::exists(tmp / "runs/alpha/xx-yy/original/vocabs"));
  EXPECT_FALSE(fs::exists(tmp / "runs/alpha/xx-yy/100"));
}

TEST(Cli, FitEvaluateAndReportEndToEnd) {
  testutil::TempDir tmp;
  write_two_datasets(tmp / "runs");
  testutil::write_text(tmp / "exp.toml",
                       config_text(tmp / "runs",
                                   "[training]\ntranslators = [\"lexicon\", \"identity\"]\n"
                                   "[evaluation]\nmetrics = [\"bleu\", \"chrf\"]\nbeams = [1]\nscope = \"own\"\n"
                                   "[[reports]]\nname = \"matrix\"\ntype = \"cross_dataset\"\nmetric = \"bleu\"\n"
                                   "[[reports]]\nname = \"lex_vs_id\"\ntype = \"comparison\"\nsystem_a = \"identity\"\n"
                                   "system_b = \"lexicon\"\nmetric = \"bleu\"\n"));
  std::string cfg = (tmp / "exp.toml").string();

  // Fitting before building is a per-run failure, not a crash.
  auto early = seqpipe_cli(tmp.path(), {"fit", "-c", cfg});
  EXPECT_EQ(early.exit_code, 2) << early.out;

  ASSERT_EQ(seqpipe_cli(tmp.path(), {"build", "-c", cfg}).exit_code, 0);
  auto fit = seqpipe_cli(tmp.path(), {"fit", "-j", "2", "-c", cfg});
  EXPECT_EQ(fit.exit_code, 0) << fit.out << fit.err;
  EXPECT_TRUE(contains(fit.out, "summary: 6 runs (6 trained")) << fit.out;

  auto own = seqpipe_cli(tmp.path(), {"evaluate", "-c", cfg});
  EXPECT_EQ(own.exit_code, 0) << own.out << own.err;
  // 6 runs, one dataset each, two metrics.
  EXPECT_TRUE(contains(own.out, "summary: 12 scores, 0 failures (scope own)")) << own.out;

  auto compat = seqpipe_cli(tmp.path(), {"evaluate", "--scope", "compatible", "-c", cfg});
  EXPECT_EQ(compat.exit_code, 0) << compat.out;
  // Every run is also scored on the other datasets of the same pair.
  EXPECT_TRUE(contains(compat.out, "summary: 36 scores, 0 failures (scope compatible)")) << compat.out;
  fs::path cross = tmp / "runs/alpha/xx-yy/original/models/alpha_xx-yy_original__lexicon__words_200/eval/"
                         "beta_xx-yy_original/beam1/bleu.json";
  EXPECT_TRUE(fs::exists(cross));

  auto undefined = seqpipe_cli(tmp.path(), {"report", "nosuch", "-c", cfg});
  EXPECT_EQ(undefined.exit_code, 1);
  EXPECT_TRUE(contains(undefined.out + undefined.err, "nosuch"));

  auto report = seqpipe_cli(tmp.path(), {"report", "-c", cfg});
  EXPECT_EQ(report.exit_code, 0) << report.out << report.err;
  EXPECT_TRUE(contains(report.out, "lex_vs_id: mean bleu difference (lexicon - identity)")) << report.out;
  auto matrix = io::parse_csv(testutil::read_text(tmp / "runs/reports/matrix/report.csv"));
  // Header plus six runs; three evaluation datasets as columns.
  ASSERT_EQ(matrix.size(), 7u);
  EXPECT_EQ(matrix[0].size(), 6u);
  auto table = io::parse_csv(testutil::read_text(tmp / "runs/reports/table.csv"));
  EXPECT_EQ(table.size(), 37u);

  // The structured log has one JSON object per line.
  auto log_lines = io::read_lines(tmp / "runs/logs/seqpipe.jsonl");
  ASSERT_FALSE(log_lines.empty());
  for (const auto& line : log_lines) {
    auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("command") && j.contains("level") && j.contains("msg") && j.contains("ts_ms")) << line;
  }
}

TEST(Cli, ShortAdapterOutputFailsEvaluation) {
  testutil::TempDir tmp;
  testutil::write_synthetic(tmp / "runs", "alpha", testutil::synthetic_corpus(1, 100, 10, 10));
  testutil::write_text(tmp / "exp.toml",
                       "base_path = \"" + (tmp / "runs").string() + "\"\ninteractive = false\n"
                       "[[datasets]]\nname = \"alpha\"\nlanguages = [\"xx-yy\"]\nsizes = [\"original\"]\n"
                       "[[subword]]\nmodel = \"bytes\"\n"
                       "[training]\ntranslators = [\"" + (testutil::data_dir() / "mock_short.json").string() + "\"]\n");
  std::string cfg = (tmp / "exp.toml").string();
  ASSERT_EQ(seqpipe_cli(tmp.path(), {"build", "-c", cfg}).exit_code, 0);
  ASSERT_EQ(seqpipe_cli(tmp.path(), {"fit", "-c", cfg}).exit_code, 0);
  auto r = seqpipe_cli(tmp.path(), {"evaluate", "-c", cfg});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_TRUE(contains(r.out, "failures")) << r.out;
}

TEST(Cli, BasePathEnvironmentOverride) {
  testutil::TempDir tmp;
  write_two_datasets(tmp / "elsewhere");
  testutil::write_text(tmp / "exp.toml", config_text(tmp / "ignored"));
  auto r = seqpipe_cli(tmp.path(), {"build", "-c", (tmp / "exp.toml").string()},
                       {{cli::kBasePathEnv, (tmp / "elsewhere").string()}});
  EXPECT_EQ(r.exit_code, 0) << r.out << r.err;
  EXPECT_TRUE(fs::exists(tmp / "elsewhere/alpha/xx-yy/100/data/splits/train.xx"));
  EXPECT_FALSE(fs::exists(tmp / "ignored"));
}

TEST(Cli, DerivedDomainDatasets) {
  testutil::TempDir tmp;
  fs::path base = tmp / "runs";
  auto c = testutil::synthetic_corpus(4, 200, 20, 20);
  testutil::write_synthetic(base, "scielo", c);
  // Alternate pairs are health / biology.
  fs::path meta = base / "scielo/xx-yy/original/data/splits/meta";
  for (auto [split, n] : {std::pair{"train", 200}, {"val", 20}, {"test", 20}}) {
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i) labels.push_back(i % 2 ? "biology" : "health");
    testutil::write_lines(meta / (std::string(split) + ".domain"), labels);
  }
  testutil::write_text(tmp / "exp.toml",
                       "base_path = \"" + base.string() + "\"\ninteractive = false\n"
                       "[[datasets]]\nname = \"scielo\"\nlanguages = [\"xx-yy\"]\nsizes = [\"original\"]\n"
                       "[[datasets]]\nname = \"health\"\nlanguages = [\"xx-yy\"]\nsizes = [\"original\", \"50\"]\n"
                       "derive = {from = \"scielo\", domain = \"health\"}\n"
                       "[[subword]]\nmodel = \"bytes\"\n");
  auto r = seqpipe_cli(tmp.path(), {"build", "-c", (tmp / "exp.toml").string()});
  EXPECT_EQ(r.exit_code, 0) << r.out << r.err;
  auto train = io::read_lines(base / "health/xx-yy/original/data/splits/train.xx");
  ASSERT_EQ(train.size(), 100u);
  for (std::size_t i = 0; i < train.size(); ++i) EXPECT_EQ(train[i], c.train_src[2 * i]);
  EXPECT_EQ(io::read_lines(base / "health/xx-yy/50/data/splits/train.xx").size(), 50u);
  EXPECT_EQ(io::read_lines(base / "health/xx-yy/50/data/splits/test.xx").size(), 10u);
}

TEST(Cli, InProcessEntryPoint) {
  testutil::TempDir tmp;
  write_two_datasets(tmp / "runs");
  testutil::write_text(tmp / "exp.toml", config_text(tmp / "runs"));
  std::string cfg = (tmp / "exp.toml").string();
  std::vector<std::string> args = {"seqpipe", "build", "--non-interactive", "-c", cfg};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out;
  EXPECT_EQ(cli::run(static_cast<int>(argv.size()), argv.data(), out), 0);
  EXPECT_TRUE(contains(out.str(), "summary: 3 variants")) << out.str();
}

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "seqpipe/corpus_stats.hpp"
#include "seqpipe/dataset.hpp"
#include "seqpipe/error.hpp"
#include "seqpipe/evaluation.hpp"
#include "seqpipe/io.hpp"
#include "seqpipe/process.hpp"
#include "seqpipe/reporting.hpp"
#include "seqpipe/subword.hpp"
#include "seqpipe/translator.hpp"
#include "seqpipe/variant_store.hpp"
#include "test_util.hpp"

using namespace seqpipe;
using nlohmann::json;
using Lines = std::vector<std::string>;

namespace {

// Tolerances and time budgets.
constexpr double kToolkitMeanDelta = -0.25;
constexpr double kToolkitMeanTolerance = 0.005;
constexpr double kOracleBleuTolerance = 0.01;
constexpr double kFastBudget = 1.0;
constexpr double kPropertyBudget = 30.0;
constexpr double kSmokeBudget = 60.0;
constexpr int kRoundtripStrings = 10000;
constexpr int kViterbiVocabularies = 200;
constexpr int kViterbiStringsEach = 5;
constexpr int kMetricCorpora = 200;

// Empty string means the check passed; anything else is the failure detail.
using Check = std::function<std::string()>;

struct Criterion {
  std::string name;
  double budget_seconds;
  Check check;
};

class Failure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw Failure(detail);
}

template <typename T>
std::string str(const T& v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

// ---------------------------------------------------------------------------

std::string variant_arithmetic() {
  std::vector<DatasetDecl> decls = {
      {"multi30k", {LanguagePair::parse("de-en")}, {SizeSpec::from_label("original"), SizeSpec::from_label("10k")}},
      {"europarl", {LanguagePair::parse("de-en"), LanguagePair::parse("fr-en")}, {SizeSpec::from_label("50k")}},
  };
  std::vector<SubwordPlanEntry> plan = {{SubwordScheme::bpe, {8000, 16000, 32000}},
                                        {SubwordScheme::unigram, {8000, 16000, 32000}},
                                        {SubwordScheme::chars, {1000}},
                                        {SubwordScheme::bytes, {}},
                                        {SubwordScheme::words, {32000}}};
  auto variants = enumerate_variants(expand_refs("/data", decls), {}, plan);
  require(variants.size() == 36, "enumerated " + str(variants.size()) + " variants");
  return {};
}

std::string toolkit_comparison() {
  auto table = ReportTable::from_csv(testutil::read_text(testutil::data_dir() / "toolkit_scores.csv"));
  auto c = system_comparison(table, "fairseq", "autonmt", "bleu");
  require(c.rows.size() == 8, "matched " + str(c.rows.size()) + " pairs");
  require(std::abs(c.signed_mean - kToolkitMeanDelta) <= kToolkitMeanTolerance, "signed mean " + str(c.signed_mean));
  return "signed mean " + io::format_2dp(c.signed_mean);
}

std::string byte_roundtrip() {
  std::mt19937_64 rng(20240611);
  Lines corpus;
  for (int i = 0; i < 400; ++i) corpus.push_back(testutil::random_unicode(rng, 60));
  std::size_t checked = 0;
  for (auto scheme : {SubwordScheme::bytes, SubwordScheme::chars_bytes, SubwordScheme::bpe_bytes,
                      SubwordScheme::unigram_bytes, SubwordScheme::words_bytes}) {
    std::optional<std::uint32_t> size;
    if (requires_vocab_size(scheme)) size = 600;
    auto model = train_tokenizer(scheme, size, corpus);
    for (int i = 0; i < kRoundtripStrings; ++i) {
      auto text = testutil::random_unicode(rng, 40);
      auto ids = model.encode(text);
      require(model.decode(ids) == text, std::string(to_string(scheme)) + " lost text at string " + str(i));
      require(model.count_unknowns(ids) == 0, std::string(to_string(scheme)) + " produced unknowns");
      ++checked;
    }
  }
  return str(checked) + " strings";
}

std::string viterbi_oracle() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> letter('a', 'd'), plen(2, 4), slen(1, 8), npieces(3, 20);
  std::uniform_real_distribution<double> lp(-12.0, -0.1);
  int cases = 0;
  for (int v = 0; v < kViterbiVocabularies; ++v) {
    std::map<std::string, double> pieces;
    for (char c = 'a'; c <= 'd'; ++c) pieces[std::string(1, c)] = lp(rng);
    int extra = npieces(rng);
    for (int i = 0; i < extra; ++i) {
      std::string p;
      int l = plen(rng);
      for (int k = 0; k < l; ++k) p += static_cast<char>(letter(rng));
      pieces[p] = lp(rng);
    }
    auto model = TokenizerModel::unigram_from_pieces({pieces.begin(), pieces.end()}, false);
    for (int s = 0; s < kViterbiStringsEach; ++s) {
      std::string text;
      int l = slen(rng);
      for (int k = 0; k < l; ++k) text += static_cast<char>(letter(rng));
      double got = model.viterbi(text).log_prob;
      double want = oracle::brute_force_best(pieces, text);
      require(got == want, "'" + text + "': viterbi " + str(got) + " vs brute force " + str(want));
      ++cases;
    }
  }
  return str(cases) + " cases";
}

std::string bpe_oracle() {
  auto model = train_tokenizer(SubwordScheme::bpe, 100, oracle::kBpeCorpus);
  require(model.merges() == oracle::naive_bpe(oracle::kBpeCorpus, 100), "merges differ from the pair-count oracle");
  std::vector<Merge> hand = {{"e", "s"}, {"es", "t"}, {"est", " "}, {"l", "o"}, {"lo", "w"}};
  require(model.merges() == hand, "merges differ from the hand simulation");
  testutil::TempDir tmp;
  train_tokenizer(SubwordScheme::bpe, 100, oracle::kBpeCorpus).save(tmp / "a.json");
  train_tokenizer(SubwordScheme::bpe, 100, oracle::kBpeCorpus).save(tmp / "b.json");
  require(testutil::read_text(tmp / "a.json") == testutil::read_text(tmp / "b.json"), "retraining is not byte-identical");
  return {};
}

Lines random_lines(std::mt19937_64& rng, int lines) {
  std::uniform_int_distribution<int> len(1, 15), word(0, 29);
  Lines out;
  for (int i = 0; i < lines; ++i) {
    std::string s;
    int n = len(rng);
    for (int k = 0; k < n; ++k) s += (k ? " w" : "w") + std::to_string(word(rng));
    out.push_back(s);
  }
  return out;
}

std::string metric_properties() {
  std::mt19937_64 rng(777);
  BleuConfig unsmoothed{4, BleuSmoothing::none, 0.1};
  for (int trial = 0; trial < kMetricCorpora; ++trial) {
    auto refs = random_lines(rng, 10);
    require(score_bleu(refs, refs) == 100.0, "BLEU(x, x) != 100");
    require(score_chrf(refs, refs) == 100.0, "chrF(x, x) != 100");

    Lines disjoint;
    for (const auto& line : refs) {
      std::string d;
      for (char ch : line) d += ch == ' ' ? ' ' : static_cast<char>('A' + (ch % 20));
      disjoint.push_back(d);
    }
    require(score_bleu(disjoint, refs, unsmoothed) == 0.0, "disjoint BLEU != 0");
    require(score_chrf(disjoint, refs) == 0.0, "disjoint chrF != 0");

    Lines corrupted = refs;
    corrupted[rng() % corrupted.size()] += " qq";
    require(score_bleu(corrupted, refs) < 100.0, "single-line corruption did not lower BLEU");

    auto hyps = random_lines(rng, 10);
    for (auto s : {BleuSmoothing::none, BleuSmoothing::floor, BleuSmoothing::exp}) {
      double b = score_bleu(hyps, refs, {4, s, 0.1});
      require(b >= 0.0 && b <= 100.0, "BLEU out of range: " + str(b));
    }
    double c = score_chrf(hyps, refs);
    require(c >= 0.0 && c <= 100.0, "chrF out of range: " + str(c));
  }
  return str(kMetricCorpora) + " corpora";
}

// ---------------------------------------------------------------------------
// End-to-end through the command line

struct CliRun {
  int exit_code;
  std::string output;
};

CliRun seqpipe_cli(const fs::path& work, const std::string& command, const std::vector<std::string>& extra = {}) {
  std::vector<std::string> argv = {testutil::cli_binary().string(), command, "-c", (work / "exp.toml").string()};
  argv.insert(argv.end(), extra.begin(), extra.end());
  process::Options o;
  o.stdout_path = work / (command + ".out");
  o.stderr_path = work / (command + ".out");
  o.append = true;
  auto r = process::run(argv, o);
  require(r.spawned, "could not start the CLI: " + r.spawn_error);
  return {r.exit_code, testutil::read_text(work / (command + ".out"))};
}

void expect_exit(const CliRun& r, int code, const std::string& what) {
  require(r.exit_code == code, what + " exited " + str(r.exit_code) + ":\n" + r.output);
}

// Tag balance and a single root element; enough to catch truncated or
// interleaved SVG output.
bool well_formed_svg(const std::string& text) {
  std::vector<std::string> stack;
  int roots = 0;
  std::size_t pos = 0;
  while ((pos = text.find('<', pos)) != std::string::npos) {
    std::size_t end = text.find('>', pos);
    if (end == std::string::npos) return false;
    std::string tag = text.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (tag[0] == '/') {
      std::string name = tag.substr(1);
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
      continue;
    }
    std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
    if (stack.empty()) ++roots;
    if (tag.back() != '/') stack.push_back(name);
  }
  return stack.empty() && roots == 1 && text.find("<svg") != std::string::npos;
}

std::size_t check_outputs(const fs::path& dir) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension();
    std::string text = testutil::read_text(e.path());
    if (ext == ".csv") {
      std::vector<std::vector<std::string>> rows;
      try {
        rows = io::parse_csv(text);
      } catch (const std::exception& ex) {
        throw Failure(e.path().string() + ": " + ex.what());
      }
      require(!rows.empty(), e.path().string() + " is empty");
      for (const auto& row : rows)
        require(row.size() == rows[0].size(), e.path().string() + " has ragged rows");
    } else if (ext == ".json") {
      require(json::accept(text), e.path().string() + " is not valid JSON");
    } else if (ext == ".jsonl") {
      std::istringstream in(text);
      for (std::string line; std::getline(in, line);)
        require(json::accept(line), e.path().string() + " has an invalid line");
    } else if (ext == ".svg") {
      require(well_formed_svg(text), e.path().string() + " is not well-formed SVG");
    } else {
      continue;
    }
    ++files;
  }
  return files;
}

std::string end_to_end() {
  testutil::TempDir tmp;
  fs::path base = tmp / "runs";

  // 1,000 pairs as raw data for the split step; a second dataset with the
  // same pair for compatible-scope evaluation. The last 100 pairs draw from a
  // wide rare vocabulary, so words that land only in the test split stay
  // unseen and the oracle score is below 100.
  auto corpus = testutil::synthetic_corpus(11, 900, 0, 100, 70, 2070);
  Lines src = corpus.train_src, trg = corpus.train_trg;
  src.insert(src.end(), corpus.test_src.begin(), corpus.test_src.end());
  trg.insert(trg.end(), corpus.test_trg.begin(), corpus.test_trg.end());
  fs::path raw = base / "synth/xx-yy/original/data/raw";
  testutil::write_lines(raw / "data.xx", src);
  testutil::write_lines(raw / "data.yy", trg);
  testutil::write_synthetic(base, "second", testutil::synthetic_corpus(12, 300, 20, 50));

  testutil::write_text(tmp / "exp.toml",
                       "base_path = \"" + base.string() + "\"\n"
                       "interactive = false\n"
                       "jobs = 2\n"
                       "[[datasets]]\nname = \"synth\"\nlanguages = [\"xx-yy\"]\nsizes = [\"original\"]\n"
                       "[[datasets]]\nname = \"second\"\nlanguages = [\"xx-yy\"]\nsizes = [\"original\"]\n"
                       "[splits]\nval_size = 100\ntest_size = 100\nseed = 5\n"
                       "[[subword]]\nmodel = \"words\"\nvocab_sizes = [40, 200]\n"
                       "[training]\ntranslators = [\"lexicon\"]\n"
                       "[evaluation]\nmetrics = [\"bleu\", \"chrf\"]\nbeams = [1]\n"
                       "[[reports]]\nname = \"scores\"\ntype = \"metric\"\nmetrics = [\"bleu\", \"chrf\"]\n"
                       "group_by = [\"train_dataset\", \"eval_dataset\"]\n"
                       "[[reports]]\nname = \"matrix\"\ntype = \"cross_dataset\"\nmetric = \"bleu\"\n"
                       "[[reports]]\nname = \"vocab\"\ntype = \"multivariable\"\nx = \"vocab_size\"\n"
                       "y = [\"bleu\", {variable = \"tokens_per_sentence\", axis = \"right\"}]\n");

  expect_exit(seqpipe_cli(tmp.path(), "build"), 0, "build");
  expect_exit(seqpipe_cli(tmp.path(), "fit"), 0, "fit");
  expect_exit(seqpipe_cli(tmp.path(), "evaluate", {"--scope", "own"}), 0, "evaluate (own)");
  expect_exit(seqpipe_cli(tmp.path(), "evaluate", {"--scope", "compatible"}), 0, "evaluate (compatible)");
  expect_exit(seqpipe_cli(tmp.path(), "report"), 0, "report");

  // Oracle from the splits the build actually wrote.
  fs::path splits = base / "synth/xx-yy/original/data/splits";
  auto train_src = io::read_lines(splits / "train.xx");
  auto train_trg = io::read_lines(splits / "train.yy");
  auto test_src = io::read_lines(splits / "test.xx");
  auto test_trg = io::read_lines(splits / "test.yy");
  require(train_src.size() == 800 && test_src.size() == 100, "unexpected split sizes");
  double expected = testutil::oracle_bleu(testutil::oracle_lexicon_output(train_src, train_trg, test_src), test_trg);
  require(expected < 100.0, "oracle corpus has no unseen words");

  fs::path run_dir = base / "synth/xx-yy/original/models/synth_xx-yy_original__lexicon__words_200";
  auto result = io::read_json(run_dir / "eval/synth_xx-yy_original/beam1/bleu.json");
  double got = result.at("score").get<double>();
  require(std::abs(got - expected) <= kOracleBleuTolerance,
          "lexicon BLEU " + str(got) + " vs oracle " + str(expected));
  require(fs::exists(run_dir / "eval/second_xx-yy_original/beam1/chrf.json"), "compatible-scope result missing");

  for (const char* report : {"scores", "matrix", "vocab"}) {
    require(fs::exists(base / "reports" / report / "report.csv"), std::string(report) + " report missing");
  }
  std::size_t files = check_outputs(base);
  return "BLEU " + io::format_2dp(got) + " (oracle " + io::format_2dp(expected) + "), " + str(files) +
         " output files parsed";
}

// ---------------------------------------------------------------------------

std::string adapter_contract() {
  testutil::TempDir tmp;
  auto corpus = testutil::synthetic_corpus(21, 200, 20, 30);
  corpus.train_trg = corpus.train_src;
  corpus.val_trg = corpus.val_src;
  corpus.test_trg = corpus.test_src;
  testutil::write_synthetic(tmp.path(), "mirror", corpus);
  VariantSpec v;
  v.dataset = {"mirror", {"xx", "yy"}, {}, tmp.path()};
  v.subword = SubwordScheme::bytes;
  materialize_variant(v, read_splits(v.dataset));

  auto copy = make_translator((testutil::data_dir() / "mock_copy.json").string());
  auto run = fit(*copy, v, {});
  require(run.status == RunStatus::trained, "mock copy run is " + std::string(to_string(run.status)));
  require(fs::exists(run_record_path(run.run_dir)), "no run record written");
  std::vector<DatasetRef> datasets = {v.dataset};
  std::vector<MetricSpec> metrics = {MetricSpec::make_bleu()};
  auto report = evaluate_run(*copy, run, datasets, metrics, {1, 256});
  require(report.failures.empty() && report.results.size() == 1, "mock copy evaluation failed");
  require(report.results[0].score == 100.0, "mock copy BLEU " + str(report.results[0].score));

  auto shorter = make_translator((testutil::data_dir() / "mock_short.json").string());
  auto short_run = fit(*shorter, v, {});
  bool violated = false;
  try {
    translate(*shorter, short_run, corpus.test_src, {}, tmp / "work");
  } catch (const ContractViolation&) {
    violated = true;
  }
  require(violated, "N-1 output lines were accepted");

  // The same adapter through the command line exits with 2.
  testutil::write_text(tmp / "exp.toml",
                       "base_path = \"" + tmp.path().string() + "\"\ninteractive = false\n"
                       "[[datasets]]\nname = \"mirror\"\nlanguages = [\"xx-yy\"]\nsizes = [\"original\"]\n"
                       "[[subword]]\nmodel = \"bytes\"\n"
                       "[training]\ntranslators = [\"" + (testutil::data_dir() / "mock_short.json").string() + "\"]\n");
  expect_exit(seqpipe_cli(tmp.path(), "build"), 0, "build");
  expect_exit(seqpipe_cli(tmp.path(), "fit"), 0, "fit with the short adapter");
  auto evaluated = seqpipe_cli(tmp.path(), "evaluate");
  expect_exit(evaluated, 2, "evaluate with the short adapter");
  require(evaluated.output.find("returned 29 lines") != std::string::npos,
          "no contract violation reported:\n" + evaluated.output);
  return {};
}

std::string side_mismatch(const SideStats& got, const json& want) {
  FrequencyTable freq;
  for (const auto& e : want["frequencies"]) freq.emplace_back(e[0].get<std::string>(), e[1].get<std::uint64_t>());
  if (got.sentence_count != want["sentence_count"].get<std::uint64_t>()) return "sentence_count";
  if (got.token_count != want["token_count"].get<std::uint64_t>()) return "token_count";
  if (got.min_length != want["min_length"].get<std::uint64_t>()) return "min_length";
  if (got.max_length != want["max_length"].get<std::uint64_t>()) return "max_length";
  if (got.mean_length != want["mean_length"].get<double>()) return "mean_length";
  if (got.histogram != want["histogram"].get<std::vector<std::uint64_t>>()) return "histogram";
  if (got.frequencies != freq) return "frequencies";
  if (got.unknowns_per_sentence != want["unknowns_per_sentence"].get<double>()) return "unknowns_per_sentence";
  if (got.unknown_sentence_fraction != want["unknown_sentence_fraction"].get<double>())
    return "unknown_sentence_fraction";
  return {};
}

std::string stats_oracle() {
  fs::path dir = testutil::data_dir() / "stats_fixture";
  auto want = io::read_json(dir / "expected.json");
  SplitSet splits;
  for (auto name : kSplitNames) {
    std::string n(name);
    splits.split(name) = read_corpus(dir / (n + ".de"), dir / (n + ".en"));
  }
  require(splits.train.size() == 100, "fixture has " + str(splits.train.size()) + " training sentences");
  auto stats = compute_stats(splits);
  auto model = train_tokenizer(SubwordScheme::words, 24, splits.train.src);
  for (auto name : kSplitNames) {
    std::string n(name);
    auto m = side_mismatch(stats.split(name).src, want["whitespace"][n]["src"]);
    require(m.empty(), n + ".src " + m);
    m = side_mismatch(stats.split(name).trg, want["whitespace"][n]["trg"]);
    require(m.empty(), n + ".trg " + m);
    m = side_mismatch(side_stats(splits.split(name).src, &model), want["words24_src"][n]);
    require(m.empty(), n + ".src with a 24-word model: " + m);
  }
  FrequencyTable train_freq;
  for (const auto& e : want["whitespace_train_frequencies"])
    train_freq.emplace_back(e[0].get<std::string>(), e[1].get<std::uint64_t>());
  require(stats.train_frequencies == train_freq, "combined training frequencies");
  return {};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"variant arithmetic: 36 variants", kFastBudget, variant_arithmetic},
      {"system comparison: signed mean -0.25", kFastBudget, toolkit_comparison},
      {"tokenizer roundtrip: byte-fallback schemes", kPropertyBudget, byte_roundtrip},
      {"unigram viterbi oracle", kPropertyBudget, viterbi_oracle},
      {"bpe determinism and oracle", kFastBudget, bpe_oracle},
      {"metric properties", kPropertyBudget, metric_properties},
      {"end-to-end smoke", kSmokeBudget, end_to_end},
      {"adapter contract", kSmokeBudget, adapter_contract},
      {"stats oracle", kFastBudget, stats_oracle},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.check();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && seconds > c.budget_seconds) {
      ok = false;
      detail = "took " + str(seconds) + " s, budget " + str(c.budget_seconds) + " s";
    }
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS " : "FAIL ") << c.name << " [" << io::format_2dp(seconds) << " s]";
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/" << criteria.size() << std::endl;
  return failed ? 1 : 0;
}

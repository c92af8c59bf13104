#include "seqpipe/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>

#include <spdlog/spdlog.h>
#include <unicode/uchar.h>

#include "seqpipe/io.hpp"
#include "seqpipe/parallel.hpp"
#include "seqpipe/process.hpp"
#include "seqpipe/utf8.hpp"

namespace seqpipe {

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::uint64_t>;

NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> g(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                    tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++out[std::move(g)];
  }
  return out;
}

void check_corpora(std::span<const std::string> hyps, std::span<const std::string> refs) {
  if (hyps.size() != refs.size())
    throw DataError("hypotheses (" + std::to_string(hyps.size()) + " lines) and references (" +
                    std::to_string(refs.size()) + " lines) differ in length");
  if (hyps.empty()) throw DataError("cannot score an empty corpus");
}

std::string opt_str(const std::optional<std::uint32_t>& v) { return v ? std::to_string(*v) : ""; }

nlohmann::json opt_json(const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string_view to_string(BleuSmoothing s) {
  switch (s) {
    case BleuSmoothing::none: return "none";
    case BleuSmoothing::floor: return "floor";
    case BleuSmoothing::exp: return "exp";
  }
  return "floor";
}

BleuSmoothing parse_bleu_smoothing(std::string_view s) {
  if (s == "none") return BleuSmoothing::none;
  if (s == "floor") return BleuSmoothing::floor;
  if (s == "exp") return BleuSmoothing::exp;
  throw ConfigError("unknown BLEU smoothing '" + std::string(s) + "' (none, floor, exp)");
}

std::vector<std::string> bleu_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (auto unit : utf8::split_chars(text)) {
    char32_t cp = utf8::decode(unit);
    if (u_isUWhiteSpace(static_cast<UChar32>(cp))) {
      flush();
    } else if (u_ispunct(static_cast<UChar32>(cp))) {
      flush();
      tokens.emplace_back(unit);
    } else {
      cur.append(unit);
    }
  }
  flush();
  return tokens;
}

BleuStats bleu_statistics(std::span<const std::string> hyps, std::span<const std::string> refs, int max_ngram) {
  check_corpora(hyps, refs);
  if (max_ngram < 1) throw ConfigError("max_ngram must be at least 1");
  BleuStats st;
  st.matches.assign(static_cast<std::size_t>(max_ngram), 0);
  st.totals.assign(static_cast<std::size_t>(max_ngram), 0);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    auto h = bleu_tokenize(hyps[i]);
    auto r = bleu_tokenize(refs[i]);
    st.hyp_length += h.size();
    st.ref_length += r.size();
    for (int n = 1; n <= max_ngram; ++n) {
      auto hc = ngrams(h, static_cast<std::size_t>(n));
      auto rc = ngrams(r, static_cast<std::size_t>(n));
      auto k = static_cast<std::size_t>(n - 1);
      for (const auto& [g, c] : hc) {
        st.totals[k] += c;
        auto it = rc.find(g);
        if (it != rc.end()) st.matches[k] += std::min(c, it->second);
      }
    }
  }
  return st;
}

double bleu_from_stats(const BleuStats& st, const BleuConfig& config) {
  if (st.hyp_length == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  double exp_factor = 1.0;
  for (std::size_t k = 0; k < st.totals.size(); ++k) {
    if (st.totals[k] == 0) continue;
    auto total = static_cast<double>(st.totals[k]);
    double p = 0.0;
    if (st.matches[k] > 0) {
      p = static_cast<double>(st.matches[k]) / total;
    } else {
      switch (config.smoothing) {
        case BleuSmoothing::none: return 0.0;
        case BleuSmoothing::floor: p = config.epsilon / total; break;
        case BleuSmoothing::exp:
          exp_factor *= 2.0;
          p = 1.0 / (exp_factor * total);
          break;
      }
    }
    log_sum += std::log(p);
    ++orders;
  }
  if (orders == 0) return 0.0;
  double c = static_cast<double>(st.hyp_length);
  double r = static_cast<double>(st.ref_length);
  double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  double score = 100.0 * bp * std::exp(log_sum / orders);
  return std::clamp(score, 0.0, 100.0);
}

double score_bleu(std::span<const std::string> hyps, std::span<const std::string> refs, const BleuConfig& config) {
  return bleu_from_stats(bleu_statistics(hyps, refs, config.max_ngram), config);
}

double score_chrf(std::span<const std::string> hyps, std::span<const std::string> refs, const ChrfConfig& config) {
  check_corpora(hyps, refs);
  if (config.char_order < 1 || config.word_order < 0 || config.beta <= 0)
    throw ConfigError("invalid chrF configuration");
  std::size_t orders = static_cast<std::size_t>(config.char_order + config.word_order);
  // Per order: hypothesis n-grams, reference n-grams, matches.
  std::vector<std::array<std::uint64_t, 3>> stats(orders, {0, 0, 0});

  auto accumulate = [&](const std::vector<std::string>& h, const std::vector<std::string>& r, std::size_t n,
                        std::size_t slot) {
    auto hc = ngrams(h, n);
    auto rc = ngrams(r, n);
    for (const auto& [g, c] : hc) {
      stats[slot][0] += c;
      auto it = rc.find(g);
      if (it != rc.end()) stats[slot][2] += std::min(c, it->second);
    }
    for (const auto& [g, c] : rc) stats[slot][1] += c;
  };

  for (std::size_t i = 0; i < hyps.size(); ++i) {
    auto chars = [](std::string_view s) {
      std::vector<std::string> out;
      for (auto unit : utf8::split_chars(s))
        if (!u_isUWhiteSpace(static_cast<UChar32>(utf8::decode(unit)))) out.emplace_back(unit);
      return out;
    };
    auto hc = chars(hyps[i]);
    auto rc = chars(refs[i]);
    for (int n = 1; n <= config.char_order; ++n)
      accumulate(hc, rc, static_cast<std::size_t>(n), static_cast<std::size_t>(n - 1));
    if (config.word_order > 0) {
      auto hw = utf8::split_whitespace(hyps[i]);
      auto rw = utf8::split_whitespace(refs[i]);
      for (int n = 1; n <= config.word_order; ++n)
        accumulate(hw, rw, static_cast<std::size_t>(n), static_cast<std::size_t>(config.char_order + n - 1));
    }
  }

  // Precision and recall are averaged over the orders with n-grams on both
  // sides, then combined into one F-beta.
  double b2 = config.beta * config.beta;
  double avg_p = 0.0, avg_r = 0.0;
  int effective = 0;
  for (const auto& [nh, nr, nm] : stats) {
    if (nh == 0 || nr == 0) continue;
    ++effective;
    avg_p += static_cast<double>(nm) / static_cast<double>(nh);
    avg_r += static_cast<double>(nm) / static_cast<double>(nr);
  }
  if (effective == 0) return 0.0;
  avg_p /= effective;
  avg_r /= effective;
  if (avg_p + avg_r == 0.0) return 0.0;
  return std::clamp(100.0 * (1 + b2) * avg_p * avg_r / (b2 * avg_p + avg_r), 0.0, 100.0);
}

ExternalScore external_metric(const CommandTemplate& adapter, const fs::path& hyps, const fs::path& refs,
                              const fs::path& work_dir) {
  ExternalScore out;
  try {
    Bindings b = {{"INPUT", fs::absolute(hyps).string()}, {"OUTPUT", fs::absolute(refs).string()}};
    auto argv = render_command(adapter, b);
    if (argv.empty()) throw ConfigError("external metric command is empty");
    fs::create_directories(work_dir);
    fs::path out_file = work_dir / (adapter.stage + ".stdout");
    fs::path err_file = work_dir / (adapter.stage + ".stderr");
    process::Options opts;
    opts.stdout_path = out_file;
    opts.stderr_path = err_file;
    auto res = process::run(argv, opts);
    out.raw_output = fs::exists(out_file) ? io::read_file(out_file) : "";
    if (!res.spawned) {
      out.error = "cannot start '" + argv[0] + "': " + res.spawn_error;
      return out;
    }
    if (res.exit_code != 0) {
      out.error = "metric command exited with code " + std::to_string(res.exit_code);
      return out;
    }
    std::string text = trim(out.raw_output);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
      out.error = "metric output is not a single number: '" + out.raw_output + "'";
      return out;
    }
    out.score = value;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

nlohmann::json MetricSpec::params() const {
  if (name == "bleu")
    return {{"max_ngram", bleu.max_ngram},
            {"smoothing", std::string(to_string(bleu.smoothing))},
            {"epsilon", bleu.epsilon},
            {"tokenizer", std::string(kBleuTokenizerVersion)}};
  if (name == "chrf")
    return {{"char_order", chrf.char_order}, {"word_order", chrf.word_order}, {"beta", chrf.beta}};
  nlohmann::json j = {{"external", true}};
  if (external) j["argv"] = external->argv;
  return j;
}

nlohmann::json to_json(const EvaluationResult& r) {
  return {
      {"run_id", r.run_id},
      {"train_dataset", r.train_dataset},
      {"eval_dataset", r.eval_dataset.id()},
      {"eval_dataset_ref", to_json(r.eval_dataset)},
      {"translator", r.translator},
      {"subword_model", r.subword_model},
      {"vocab_size", opt_json(r.vocab_size)},
      {"train_limit", opt_json(r.train_limit)},
      {"metric", r.metric},
      {"metric_params", r.metric_params},
      {"beam", r.decode.beam_width},
      {"max_output_length", r.decode.max_output_length},
      {"score", r.score},
      {"hypothesis_path", r.hypothesis_path.string()},
  };
}

EvaluationResult evaluation_from_json(const nlohmann::json& j) {
  EvaluationResult r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.train_dataset = j.at("train_dataset").get<std::string>();
    r.eval_dataset = dataset_ref_from_json(j.at("eval_dataset_ref"));
    r.translator = j.at("translator").get<std::string>();
    r.subword_model = j.at("subword_model").get<std::string>();
    if (!j.at("vocab_size").is_null()) r.vocab_size = j["vocab_size"].get<std::uint32_t>();
    if (!j.at("train_limit").is_null()) r.train_limit = j["train_limit"].get<std::uint64_t>();
    r.metric = j.at("metric").get<std::string>();
    r.metric_params = j.value("metric_params", nlohmann::json::object());
    r.decode.beam_width = j.at("beam").get<std::uint32_t>();
    r.decode.max_output_length = j.value("max_output_length", 256u);
    r.score = j.at("score").get<double>();
    r.hypothesis_path = j.value("hypothesis_path", "");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed evaluation result: ") + e.what());
  }
  return r;
}

std::vector<DatasetRef> compatible_datasets(const RunRecord& run, std::span<const DatasetRef> registry) {
  std::vector<DatasetRef> out;
  bool own_seen = false;
  for (const auto& d : registry) {
    if (d.languages != run.variant.dataset.languages) continue;
    if (d.id() == run.variant.dataset.id()) own_seen = true;
    out.push_back(d);
  }
  if (!own_seen) out.insert(out.begin(), run.variant.dataset);
  return out;
}

fs::path eval_dir(const RunRecord& run, const DatasetRef& dataset, const DecodeConfig& decode) {
  return run.run_dir / "eval" / dataset.id() / ("beam" + std::to_string(decode.beam_width));
}

EvaluationReport evaluate_run(Translator& translator, const RunRecord& run, std::span<const DatasetRef> datasets,
                              std::span<const MetricSpec> metrics, const DecodeConfig& decode,
                              const EvaluateOptions& options) {
  if (run.status != RunStatus::trained)
    throw PreconditionError("run " + run.run_id + " is not trained (status " + std::string(to_string(run.status)) + ")");
  decode.validate();

  struct PerDataset {
    std::vector<EvaluationResult> results;
    std::vector<EvaluationFailure> failures;
  };
  std::vector<PerDataset> parts(datasets.size());
  std::mutex translate_mutex;  // translators are not required to be reentrant

  parallel_for(datasets.size(), options.workers, [&](std::size_t di) {
    const DatasetRef& ds = datasets[di];
    auto& part = parts[di];
    fs::path dir = eval_dir(run, ds, decode);

    auto make_result = [&](const MetricSpec& m, double score) {
      EvaluationResult r;
      r.run_id = run.run_id;
      r.train_dataset = run.variant.dataset.id();
      r.eval_dataset = ds;
      r.translator = run.translator.kind;
      r.subword_model = std::string(to_string(run.variant.subword));
      r.vocab_size = run.variant.vocab_size;
      r.train_limit = run.variant.train_limit;
      r.metric = m.name;
      r.metric_params = m.params();
      r.decode = decode;
      r.score = score;
      r.hypothesis_path = dir / "hyp.txt";
      return r;
    };

    if (!options.force) {
      bool all = !metrics.empty();
      for (const auto& m : metrics) all = all && fs::exists(dir / (m.name + ".json"));
      if (all) {
        try {
          for (const auto& m : metrics) part.results.push_back(evaluation_from_json(io::read_json(dir / (m.name + ".json"))));
          return;
        } catch (const std::exception&) {
          part.results.clear();  // stale or corrupt; evaluate again
        }
      }
    }

    std::vector<std::string> hyps, refs;
    try {
      SplitSet splits = read_splits(ds);
      if (splits.test.empty()) throw DataError("dataset " + ds.id() + " has an empty test split");
      SplitSet norm = normalize_splits(splits, run.variant.normalization);
      refs = norm.test.trg;
      {
        std::lock_guard lock(translate_mutex);
        hyps = translate(translator, run, norm.test.src, decode, dir / "work");
      }
      io::write_lines(dir / "hyp.txt", hyps);
      io::write_lines(dir / "ref.txt", refs);
    } catch (const std::exception& e) {
      spdlog::error("evaluation of {} on {} failed: {}", run.run_id, ds.id(), e.what());
      part.failures.push_back({ds.id(), "", e.what()});
      return;
    }

    for (const auto& m : metrics) {
      try {
        double score;
        if (m.name == "bleu") {
          score = score_bleu(hyps, refs, m.bleu);
        } else if (m.name == "chrf") {
          score = score_chrf(hyps, refs, m.chrf);
        } else if (m.external) {
          auto ext = external_metric(*m.external, dir / "hyp.txt", dir / "ref.txt", dir / "work");
          if (!ext.score) throw Error(m.name + ": " + ext.error);
          score = *ext.score;
        } else {
          throw ConfigError("unknown metric '" + m.name + "'");
        }
        auto r = make_result(m, score);
        io::write_json(dir / (m.name + ".json"), to_json(r));
        part.results.push_back(std::move(r));
      } catch (const std::exception& e) {
        spdlog::error("metric {} for {} on {} failed: {}", m.name, run.run_id, ds.id(), e.what());
        part.failures.push_back({ds.id(), m.name, e.what()});
      }
    }
  });

  EvaluationReport report;
  for (auto& p : parts) {
    for (auto& r : p.results) report.results.push_back(std::move(r));
    for (auto& f : p.failures) report.failures.push_back(std::move(f));
  }
  write_evaluations_csv(run.run_dir);
  return report;
}

std::vector<EvaluationResult> load_evaluations(const fs::path& run_dir) {
  std::vector<EvaluationResult> out;
  fs::path root = run_dir / "eval";
  if (!fs::exists(root)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    if (e.path().parent_path().filename().string().rfind("beam", 0) != 0) continue;
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(evaluation_from_json(io::read_json(f)));
  return out;
}

void write_evaluations_csv(const fs::path& run_dir) {
  std::vector<std::string> header(kEvaluationCsvColumns.begin(), kEvaluationCsvColumns.end());
  std::string csv = io::csv_row(header);
  std::vector<EvaluationResult> rows;
  try {
    rows = load_evaluations(run_dir);
  } catch (const std::exception& e) {
    spdlog::warn("{}: {}", run_dir.string(), e.what());
  }
  for (const auto& r : rows)
    csv += io::csv_row({r.run_id, r.train_dataset, r.eval_dataset.id(), r.subword_model, opt_str(r.vocab_size),
                        r.metric, std::to_string(r.decode.beam_width), io::format_exact(r.score)});
  io::write_file_atomic(run_dir / "eval" / "evaluations.csv", csv);
}

}  // namespace seqpipe

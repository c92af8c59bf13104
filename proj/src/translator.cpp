#include "seqpipe/translator.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "seqpipe/io.hpp"
#include "seqpipe/parallel.hpp"
#include "seqpipe/process.hpp"
#include "seqpipe/utf8.hpp"

namespace seqpipe {

namespace {

bool is_placeholder_char(char c) { return (c >= 'A' && c <= 'Z') || c == '_'; }

bool known_placeholder(std::string_view name) {
  return std::find(kPlaceholders.begin(), kPlaceholders.end(), name) != kPlaceholders.end();
}

std::string abs_str(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

nlohmann::json caps_json(const Capabilities& c) {
  return {{"supports_beam", c.supports_beam}, {"resumable", c.resumable}};
}

Capabilities caps_from_json(const nlohmann::json& j) {
  Capabilities c;
  c.supports_beam = j.value("supports_beam", false);
  c.resumable = j.value("resumable", false);
  return c;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_width < 1) throw ConfigError("beam width must be at least 1");
  if (max_output_length < 1) throw ConfigError("max_output_length must be at least 1");
}

// ---------------------------------------------------------------------------
// Command templates

std::vector<std::string> placeholders_in(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_placeholder_char(text[j])) ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      out.emplace_back(text.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return out;
}

std::string render_text(std::string_view text, const Bindings& bindings) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && is_placeholder_char(text[j])) ++j;
      if (j > i + 1 && j < text.size() && text[j] == '}') {
        std::string name(text.substr(i + 1, j - i - 1));
        auto it = bindings.find(name);
        if (it == bindings.end()) {
          if (!known_placeholder(name)) throw ConfigError("unknown placeholder {" + name + "}");
          throw ConfigError(name + " unbound");
        }
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

std::vector<std::string> render_command(const CommandTemplate& tmpl, const Bindings& bindings) {
  std::vector<std::string> argv;
  argv.reserve(tmpl.argv.size());
  for (const auto& a : tmpl.argv) argv.push_back(render_text(a, bindings));
  return argv;
}

void CommandTemplate::validate() const {
  bool has_output = false;
  auto check = [&](const std::string& text) {
    for (const auto& name : placeholders_in(text)) {
      if (!known_placeholder(name))
        throw ConfigError(stage + " command uses unknown placeholder {" + name + "}");
      if (name == "OUTPUT") has_output = true;
    }
  };
  for (const auto& a : argv) check(a);
  for (const auto& o : outputs) check(o);
  if (stage != "preprocess" && argv.empty()) throw ConfigError(stage + " command is empty");
  if (stage == "translate" && !has_output) throw ConfigError("translate command must use {OUTPUT}");
}

CommandTemplate command_from_json(const nlohmann::json& j, std::string stage) {
  CommandTemplate t;
  t.stage = std::move(stage);
  if (j.is_array()) {
    t.argv = j.get<std::vector<std::string>>();
  } else {
    for (const auto& [k, v] : j.items())
      if (k != "argv" && k != "outputs") throw ConfigError(t.stage + " command: unknown key '" + k + "'");
    t.argv = j.value("argv", std::vector<std::string>{});
    t.outputs = j.value("outputs", std::vector<std::string>{});
  }
  t.validate();
  return t;
}

AdapterManifest AdapterManifest::from_json(const nlohmann::json& j) {
  static const std::set<std::string> keys = {"name",    "version",    "capabilities", "env",
                                             "preprocess", "train", "translate"};
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw ConfigError("adapter manifest: unknown key '" + k + "'");
  AdapterManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    if (j.contains("version")) m.version = j["version"].is_string() ? j["version"].get<std::string>()
                                                                    : j["version"].dump();
    if (j.contains("capabilities")) m.capabilities = caps_from_json(j["capabilities"]);
    if (j.contains("env")) m.env = j["env"].get<std::map<std::string, std::string>>();
    m.preprocess = command_from_json(j.value("preprocess", nlohmann::json::object()), "preprocess");
    m.train = command_from_json(j.at("train"), "train");
    m.translate = command_from_json(j.at("translate"), "translate");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("adapter manifest: ") + e.what());
  }
  if (m.name.empty()) throw ConfigError("adapter manifest: empty name");
  return m;
}

AdapterManifest AdapterManifest::load(const fs::path& path) {
  AdapterManifest m = from_json(io::read_json(path));
  // Relative program paths are taken relative to the manifest.
  fs::path dir = fs::absolute(path).parent_path();
  for (auto* t : {&m.preprocess, &m.train, &m.translate}) {
    if (t->argv.empty()) continue;
    fs::path prog = t->argv[0];
    if (prog.is_relative() && t->argv[0].find('/') != std::string::npos) t->argv[0] = (dir / prog).string();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Identity

void IdentityTranslator::preprocess(const RunContext&) {}

std::vector<fs::path> IdentityTranslator::train(const RunContext& ctx) {
  fs::path marker = ctx.model_dir / "identity.json";
  io::write_json(marker, {{"kind", "identity"}, {"variant", ctx.data->variant.key()}});
  return {marker};
}

std::vector<std::string> IdentityTranslator::translate(const RunContext& ctx, const TranslateRequest& request) {
  const auto& model = ctx.data->src_model;
  std::vector<std::string> out;
  out.reserve(request.source.size());
  for (const auto& line : request.source)
    out.push_back(model.scheme() == SubwordScheme::none ? line : model.decode(model.encode(line)));
  return out;
}

// ---------------------------------------------------------------------------
// Lexicon

Lexicon learn_lexicon(const ParallelCorpus& train) {
  train.validate();
  std::map<std::string, std::map<std::string, std::uint64_t>> cooc;
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto sw = utf8::split_whitespace(train.src[i]);
    auto tw = utf8::split_whitespace(train.trg[i]);
    std::set<std::string> src_words(sw.begin(), sw.end());
    std::set<std::string> trg_words(tw.begin(), tw.end());
    for (const auto& s : src_words) {
      auto& row = cooc[s];
      for (const auto& t : trg_words) ++row[t];
    }
  }
  Lexicon lex;
  for (const auto& [s, row] : cooc) {
    const std::string* best = nullptr;
    std::uint64_t best_n = 0;
    for (const auto& [t, n] : row)  // ascending order, so strict > keeps the smallest on ties
      if (n > best_n) {
        best = &t;
        best_n = n;
      }
    if (best) lex.emplace(s, *best);
  }
  return lex;
}

std::string translate_with_lexicon(const Lexicon& lexicon, std::string_view sentence) {
  std::string out;
  for (const auto& w : utf8::split_whitespace(sentence)) {
    if (!out.empty()) out += ' ';
    auto it = lexicon.find(w);
    out += it == lexicon.end() ? w : it->second;
  }
  return out;
}

void write_lexicon(const fs::path& path, const Lexicon& lexicon) {
  std::string out;
  for (const auto& [s, t] : lexicon) out += s + "\t" + t + "\n";
  io::write_file_atomic(path, out);
}

Lexicon read_lexicon(const fs::path& path) {
  Lexicon lex;
  for (const auto& line : io::read_lines(path)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(path.string() + ": malformed lexicon line");
    lex.emplace(line.substr(0, tab), line.substr(tab + 1));
  }
  return lex;
}

void LexiconTranslator::preprocess(const RunContext& ctx) {
  const auto& v = ctx.data->variant;
  SplitSet splits = normalize_splits(read_splits(v.dataset), v.normalization);
  io::write_lines(ctx.run_dir / "prepared" / "train.src", splits.train.src);
  io::write_lines(ctx.run_dir / "prepared" / "train.trg", splits.train.trg);
}

std::vector<fs::path> LexiconTranslator::train(const RunContext& ctx) {
  ParallelCorpus corpus;
  corpus.src = io::read_lines(ctx.run_dir / "prepared" / "train.src");
  corpus.trg = io::read_lines(ctx.run_dir / "prepared" / "train.trg");
  fs::path out = ctx.model_dir / "lexicon.tsv";
  write_lexicon(out, learn_lexicon(corpus));
  return {out};
}

std::vector<std::string> LexiconTranslator::translate(const RunContext& ctx, const TranslateRequest& request) {
  Lexicon lex = read_lexicon(ctx.model_dir / "lexicon.tsv");
  std::vector<std::string> out;
  out.reserve(request.source.size());
  for (const auto& line : request.source) out.push_back(translate_with_lexicon(lex, line));
  return out;
}

// ---------------------------------------------------------------------------
// External toolkits

ExternalTranslator::ExternalTranslator(AdapterManifest manifest, std::string spec)
    : manifest_(std::move(manifest)), spec_(std::move(spec)) {}

Bindings ExternalTranslator::bindings(const RunContext& ctx) const {
  const auto& d = *ctx.data;
  return {
      {"TRAIN_SRC", abs_str(d.encoded("train", true))},
      {"TRAIN_TRG", abs_str(d.encoded("train", false))},
      {"VAL_SRC", abs_str(d.encoded("val", true))},
      {"VAL_TRG", abs_str(d.encoded("val", false))},
      {"VOCAB_SRC", abs_str(d.vocab(true))},
      {"VOCAB_TRG", abs_str(d.vocab(false))},
      {"MODEL_DIR", abs_str(ctx.model_dir)},
      {"SEED", std::to_string(ctx.train.seed)},
  };
}

std::vector<fs::path> ExternalTranslator::run_stage(const CommandTemplate& tmpl, const Bindings& b,
                                                    const fs::path& log, const fs::path& cwd,
                                                    bool append) const {
  if (tmpl.argv.empty()) return {};
  auto argv = render_command(tmpl, b);
  process::Options opts;
  opts.stdout_path = log;
  opts.stderr_path = log;
  opts.append = append;
  opts.env = manifest_.env;
  opts.cwd = cwd;
  auto result = process::run(argv, opts);
  if (!result.spawned)
    throw StageError(tmpl.stage, 127, process::tail(log),
                     manifest_.name + " " + tmpl.stage + ": cannot start '" + argv[0] + "': " + result.spawn_error);
  if (result.exit_code != 0)
    throw StageError(tmpl.stage, result.exit_code, process::tail(log),
                     manifest_.name + " " + tmpl.stage + " exited with code " + std::to_string(result.exit_code));
  std::vector<fs::path> outputs;
  for (const auto& o : tmpl.outputs) {
    fs::path p = render_text(o, b);
    if (!fs::exists(p))
      throw StageError(tmpl.stage, 0, process::tail(log),
                       manifest_.name + " " + tmpl.stage + ": expected output " + p.string() + " is missing");
    outputs.push_back(p);
  }
  return outputs;
}

void ExternalTranslator::preprocess(const RunContext& ctx) {
  run_stage(manifest_.preprocess, bindings(ctx), ctx.log_dir / "preprocess.log", ctx.run_dir, false);
}

std::vector<fs::path> ExternalTranslator::train(const RunContext& ctx) {
  auto outputs = run_stage(manifest_.train, bindings(ctx), ctx.log_dir / "train.log", ctx.run_dir, false);
  if (outputs.empty()) outputs.push_back(ctx.model_dir);
  return outputs;
}

std::vector<std::string> ExternalTranslator::translate(const RunContext& ctx, const TranslateRequest& request) {
  const auto& d = *ctx.data;
  fs::create_directories(request.work_dir);
  fs::path input = request.work_dir / "input.txt";
  fs::path output = request.work_dir / "output.txt";
  std::vector<std::string> encoded;
  encoded.reserve(request.source.size());
  for (const auto& line : request.source) encoded.push_back(d.src_model.encode_line(line));
  io::write_lines(input, encoded);
  fs::remove(output);

  Bindings b = bindings(ctx);
  b["INPUT"] = abs_str(input);
  b["OUTPUT"] = abs_str(output);
  b["BEAM"] = std::to_string(request.decode.beam_width);
  run_stage(manifest_.translate, b, ctx.log_dir / "translate.log", ctx.run_dir, true);

  if (!fs::exists(output))
    throw ContractViolation("adapter '" + manifest_.name + "' wrote no output file " + output.string());
  auto lines = io::read_lines(output);
  if (lines.size() != request.source.size())
    throw ContractViolation("adapter '" + manifest_.name + "' returned " + std::to_string(lines.size()) +
                            " lines for " + std::to_string(request.source.size()) + " source lines");
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const auto& line : lines) out.push_back(d.trg_model.decode_line(line));
  return out;
}

std::unique_ptr<Translator> make_translator(const std::string& spec, const fs::path& config_dir) {
  if (spec == "identity") return std::make_unique<IdentityTranslator>();
  if (spec == "lexicon") return std::make_unique<LexiconTranslator>();
  fs::path p = spec;
  if (p.is_relative() && !config_dir.empty()) p = config_dir / p;
  if (!fs::exists(p))
    throw ConfigError("unknown translator '" + spec + "' (expected identity, lexicon or an adapter manifest path)");
  p = fs::absolute(p).lexically_normal();
  return std::make_unique<ExternalTranslator>(AdapterManifest::load(p), p.string());
}

// ---------------------------------------------------------------------------
// Runs

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::prepared: return "prepared";
    case RunStatus::trained: return "trained";
    case RunStatus::failed: return "failed";
  }
  return "failed";
}

RunStatus parse_run_status(std::string_view s) {
  if (s == "prepared") return RunStatus::prepared;
  if (s == "trained") return RunStatus::trained;
  if (s == "failed") return RunStatus::failed;
  throw DataError("unknown run status '" + std::string(s) + "'");
}

nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json artifacts = nlohmann::json::array();
  for (const auto& a : r.artifacts) artifacts.push_back(a.string());
  nlohmann::json j = {
      {"run_id", r.run_id},
      {"variant", to_json(r.variant)},
      {"variant_key", r.variant.key()},
      {"translator", {{"kind", r.translator.kind}, {"version", r.translator.version}, {"spec", r.translator_spec}}},
      {"capabilities", caps_json(r.capabilities)},
      {"train_config",
       {{"epochs", r.train_config.epochs},
        {"batch_size", r.train_config.batch_size},
        {"seed", r.train_config.seed},
        {"options", r.train_config.options}}},
      {"run_dir", r.run_dir.string()},
      {"artifacts", artifacts},
      {"status", std::string(to_string(r.status))},
      {"created_at", r.created_at},
      {"updated_at", r.updated_at},
  };
  if (r.failure) {
    j["failure"] = {{"stage", r.failure->stage},
                    {"exit_code", r.failure->exit_code},
                    {"message", r.failure->message},
                    {"log_tail", r.failure->log_tail}};
  }
  return j;
}

RunRecord run_from_json(const nlohmann::json& j) {
  RunRecord r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.variant = variant_from_json(j.at("variant"));
    const auto& t = j.at("translator");
    r.translator = {t.at("kind").get<std::string>(), t.at("version").get<std::string>()};
    r.translator_spec = t.value("spec", r.translator.kind);
    r.capabilities = caps_from_json(j.value("capabilities", nlohmann::json::object()));
    const auto& tc = j.at("train_config");
    r.train_config.epochs = tc.at("epochs").get<std::uint32_t>();
    r.train_config.batch_size = tc.at("batch_size").get<std::uint32_t>();
    r.train_config.seed = tc.at("seed").get<std::uint64_t>();
    r.train_config.options = tc.value("options", nlohmann::json::object());
    r.run_dir = j.at("run_dir").get<std::string>();
    for (const auto& a : j.at("artifacts")) r.artifacts.emplace_back(a.get<std::string>());
    r.status = parse_run_status(j.at("status").get<std::string>());
    r.created_at = j.value("created_at", "");
    r.updated_at = j.value("updated_at", "");
    if (j.contains("failure")) {
      const auto& f = j["failure"];
      r.failure = RunFailure{f.at("stage").get<std::string>(), f.at("exit_code").get<int>(),
                             f.value("message", ""), f.value("log_tail", "")};
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed run record: ") + e.what());
  }
  return r;
}

std::string make_run_id(const VariantSpec& v, const TranslatorIdentity& t) {
  return v.dataset.id() + "__" + t.kind + "__" + v.dir_name();
}

fs::path run_dir_for(const VariantSpec& v, const std::string& run_id) { return layout::models_root(v.dataset) / run_id; }

fs::path run_record_path(const fs::path& run_dir) { return run_dir / "run.json"; }

RunRecord load_run(const fs::path& run_dir) { return run_from_json(io::read_json(run_record_path(run_dir))); }

RunRecord fit(Translator& translator, const VariantSpec& variant, const TrainConfig& config,
              const FitOptions& options, bool* reused) {
  if (reused) *reused = false;
  VariantArtifacts data = VariantArtifacts::load(variant);

  RunRecord rec;
  rec.translator = translator.identity();
  rec.run_id = make_run_id(variant, rec.translator);
  rec.run_dir = run_dir_for(variant, rec.run_id);
  fs::path record_path = run_record_path(rec.run_dir);

  if (!options.force && fs::exists(record_path)) {
    RunRecord existing = load_run(rec.run_dir);
    if (existing.status == RunStatus::trained) {
      if (reused) *reused = true;
      return existing;
    }
  }

  rec.variant = variant;
  rec.translator_spec = translator.spec();
  rec.capabilities = translator.capabilities();
  rec.train_config = config;
  rec.created_at = rec.updated_at = io::utc_timestamp();
  rec.status = RunStatus::prepared;

  RunContext ctx{&data, rec.run_dir, rec.run_dir / "checkpoints", rec.run_dir / "logs", config};
  if (!rec.capabilities.resumable) fs::remove_all(ctx.model_dir);
  fs::create_directories(ctx.model_dir);
  fs::create_directories(ctx.log_dir);

  auto save = [&] {
    rec.updated_at = io::utc_timestamp();
    io::write_json(record_path, to_json(rec));
  };
  save();

  auto run_stage = [&](const std::string& stage, auto&& fn) {
    try {
      fn();
      return true;
    } catch (const StageError& e) {
      rec.failure = RunFailure{e.stage, e.exit_code, e.what(), e.log_tail};
    } catch (const std::exception& e) {
      rec.failure = RunFailure{stage, -1, e.what(), ""};
    }
    rec.status = RunStatus::failed;
    spdlog::error("run {} failed in {}: {}", rec.run_id, stage, rec.failure->message);
    save();
    return false;
  };

  if (!run_stage("preprocess", [&] { translator.preprocess(ctx); })) return rec;
  std::vector<fs::path> artifacts;
  if (!run_stage("train", [&] {
        artifacts = translator.train(ctx);
        for (const auto& a : artifacts)
          if (!fs::exists(a)) throw Error("train reported artifact " + a.string() + " which does not exist");
      }))
    return rec;

  rec.artifacts = std::move(artifacts);
  rec.status = RunStatus::trained;
  rec.failure.reset();
  save();
  spdlog::info("run {} trained", rec.run_id);
  return rec;
}

std::vector<std::string> translate(Translator& translator, const RunRecord& run,
                                   const std::vector<std::string>& source, const DecodeConfig& decode,
                                   const fs::path& work_dir) {
  if (run.status != RunStatus::trained)
    throw PreconditionError("run " + run.run_id + " is not trained (status " + std::string(to_string(run.status)) + ")");
  decode.validate();
  DecodeConfig effective = decode;
  if (!translator.capabilities().supports_beam && decode.beam_width != 1) {
    spdlog::warn("translator '{}' does not support beam search; beam width {} ignored", translator.identity().kind,
                 decode.beam_width);
  }
  VariantArtifacts data = VariantArtifacts::load(run.variant);
  RunContext ctx{&data, run.run_dir, run.run_dir / "checkpoints", run.run_dir / "logs", run.train_config};
  fs::create_directories(ctx.log_dir);
  TranslateRequest req{source, effective, work_dir};
  auto out = translator.translate(ctx, req);
  if (out.size() != source.size())
    throw ContractViolation("translator '" + translator.identity().kind + "' returned " + std::to_string(out.size()) +
                            " lines for " + std::to_string(source.size()) + " source lines");
  return out;
}

std::vector<FitOutcome> run_fit_jobs(const std::vector<FitJob>& jobs, const TrainConfig& config,
                                     const FitOptions& options, std::size_t workers, const fs::path& config_dir) {
  std::vector<FitOutcome> outcomes(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    auto& out = outcomes[i];
    out.job = jobs[i];
    try {
      auto translator = make_translator(jobs[i].translator_spec, config_dir);
      bool reused = false;
      out.record = fit(*translator, jobs[i].variant, config, options, &reused);
      out.skipped = reused;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });
  return outcomes;
}

}  // namespace seqpipe

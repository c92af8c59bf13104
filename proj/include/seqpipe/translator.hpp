#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqpipe/dataset.hpp"
#include "seqpipe/error.hpp"
#include "seqpipe/variant_store.hpp"

namespace seqpipe {

struct TrainConfig {
  std::uint32_t epochs = 1;
  std::uint32_t batch_size = 32;
  std::uint64_t seed = 1234;
  nlohmann::json options = nlohmann::json::object();  // adapter-specific, passed through
};

struct DecodeConfig {
  std::uint32_t beam_width = 5;
  std::uint32_t max_output_length = 256;
  void validate() const;
};

struct TranslatorIdentity {
  std::string kind;
  std::string version;
  friend bool operator==(const TranslatorIdentity&, const TranslatorIdentity&) = default;
};

struct Capabilities {
  bool supports_beam = false;
  bool resumable = false;  // false: train restarts from scratch
};

/// What a translator sees during preprocess/train/translate.
struct RunContext {
  const VariantArtifacts* data = nullptr;
  fs::path run_dir;
  fs::path model_dir;
  fs::path log_dir;
  TrainConfig train;
};

struct TranslateRequest {
  std::vector<std::string> source;  // normalized plain text
  DecodeConfig decode;
  fs::path work_dir;  // scratch space owned by this request
};

/// A stage that failed with a process exit code and log.
class StageError : public Error {
 public:
  StageError(std::string stage, int exit_code, std::string log_tail, const std::string& message)
      : Error(message), stage(std::move(stage)), exit_code(exit_code), log_tail(std::move(log_tail)) {}
  std::string stage;
  int exit_code;
  std::string log_tail;
};

class Translator {
 public:
  virtual ~Translator() = default;
  virtual TranslatorIdentity identity() const = 0;
  virtual Capabilities capabilities() const = 0;
  /// How the translator was named in the config; stored in the RunRecord so
  /// the same translator can be rebuilt for evaluation.
  virtual std::string spec() const = 0;

  virtual void preprocess(const RunContext& ctx) = 0;
  /// Returns the artifact paths it produced.
  virtual std::vector<fs::path> train(const RunContext& ctx) = 0;
  /// Returns one plain-text hypothesis per source line.
  virtual std::vector<std::string> translate(const RunContext& ctx, const TranslateRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Command templates for external toolkits

inline constexpr std::array<std::string_view, 11> kPlaceholders = {
    "TRAIN_SRC", "TRAIN_TRG", "VAL_SRC", "VAL_TRG", "VOCAB_SRC", "VOCAB_TRG",
    "MODEL_DIR", "INPUT",     "OUTPUT",  "BEAM",    "SEED"};

using Bindings = std::map<std::string, std::string>;

struct CommandTemplate {
  std::string stage;  // preprocess, train, translate (or a metric stage)
  std::vector<std::string> argv;
  std::vector<std::string> outputs;  // path templates that must exist after success

  /// Throws ConfigError on unknown placeholders or a translate stage without
  /// {OUTPUT}.
  void validate() const;
};

/// Placeholder names used in `text`, in order of appearance.
std::vector<std::string> placeholders_in(std::string_view text);
/// Pure textual substitution. Throws ConfigError("<NAME> unbound").
std::string render_text(std::string_view text, const Bindings& bindings);
std::vector<std::string> render_command(const CommandTemplate& tmpl, const Bindings& bindings);

CommandTemplate command_from_json(const nlohmann::json& j, std::string stage);

struct AdapterManifest {
  std::string name;
  std::string version = "0";
  Capabilities capabilities;
  std::map<std::string, std::string> env;
  CommandTemplate preprocess;
  CommandTemplate train;
  CommandTemplate translate;

  static AdapterManifest from_json(const nlohmann::json& j);
  static AdapterManifest load(const fs::path& path);
};

// ---------------------------------------------------------------------------
// Translators

/// Encodes with the source tokenizer and decodes straight back.
class IdentityTranslator : public Translator {
 public:
  TranslatorIdentity identity() const override { return {"identity", "1"}; }
  Capabilities capabilities() const override { return {false, false}; }
  std::string spec() const override { return "identity"; }
  void preprocess(const RunContext& ctx) override;
  std::vector<fs::path> train(const RunContext& ctx) override;
  std::vector<std::string> translate(const RunContext& ctx, const TranslateRequest& request) override;
};

/// Word-level lexicon: source word -> most frequently co-occurring target word.
using Lexicon = std::map<std::string, std::string>;

/// Co-occurrence is counted once per aligned pair for each (source word,
/// target word) appearing in it. Ties go to the lexicographically smallest
/// target word.
Lexicon learn_lexicon(const ParallelCorpus& train);
std::string translate_with_lexicon(const Lexicon& lexicon, std::string_view sentence);
void write_lexicon(const fs::path& path, const Lexicon& lexicon);
Lexicon read_lexicon(const fs::path& path);

class LexiconTranslator : public Translator {
 public:
  TranslatorIdentity identity() const override { return {"lexicon", "1"}; }
  Capabilities capabilities() const override { return {false, false}; }
  std::string spec() const override { return "lexicon"; }
  void preprocess(const RunContext& ctx) override;
  std::vector<fs::path> train(const RunContext& ctx) override;
  std::vector<std::string> translate(const RunContext& ctx, const TranslateRequest& request) override;
};

/// Drives a third-party toolkit through the three command templates of a
/// manifest. Works on encoded text; decoding back to plain text happens here.
class ExternalTranslator : public Translator {
 public:
  ExternalTranslator(AdapterManifest manifest, std::string spec);
  TranslatorIdentity identity() const override { return {manifest_.name, manifest_.version}; }
  Capabilities capabilities() const override { return manifest_.capabilities; }
  std::string spec() const override { return spec_; }
  void preprocess(const RunContext& ctx) override;
  std::vector<fs::path> train(const RunContext& ctx) override;
  std::vector<std::string> translate(const RunContext& ctx, const TranslateRequest& request) override;

 private:
  Bindings bindings(const RunContext& ctx) const;
  std::vector<fs::path> run_stage(const CommandTemplate& tmpl, const Bindings& b, const fs::path& log,
                                  const fs::path& cwd, bool append) const;

  AdapterManifest manifest_;
  std::string spec_;
};

/// "identity", "lexicon", or a path to an adapter manifest (JSON). Relative
/// manifest paths resolve against `config_dir`.
std::unique_ptr<Translator> make_translator(const std::string& spec, const fs::path& config_dir = {});

// ---------------------------------------------------------------------------
// Runs

enum class RunStatus { prepared, trained, failed };
std::string_view to_string(RunStatus s);
RunStatus parse_run_status(std::string_view s);

struct RunFailure {
  std::string stage;
  int exit_code = -1;
  std::string message;
  std::string log_tail;
};

struct RunRecord {
  std::string run_id;
  VariantSpec variant;
  TranslatorIdentity translator;
  std::string translator_spec;
  Capabilities capabilities;
  TrainConfig train_config;
  fs::path run_dir;
  std::vector<fs::path> artifacts;
  RunStatus status = RunStatus::prepared;
  std::optional<RunFailure> failure;
  std::string created_at;
  std::string updated_at;
};

nlohmann::json to_json(const RunRecord& r);
RunRecord run_from_json(const nlohmann::json& j);

/// "<dataset id>__<translator kind>__<variant dir>"
std::string make_run_id(const VariantSpec& v, const TranslatorIdentity& t);
fs::path run_dir_for(const VariantSpec& v, const std::string& run_id);
fs::path run_record_path(const fs::path& run_dir);
RunRecord load_run(const fs::path& run_dir);

struct FitOptions {
  bool force = false;
};

/// Throws PreconditionError (and writes nothing) when the variant is not
/// materialized. Stage failures produce a failed RunRecord instead of throwing.
/// `reused` is set when an existing trained run was returned untouched.
RunRecord fit(Translator& translator, const VariantSpec& variant, const TrainConfig& config,
              const FitOptions& options = {}, bool* reused = nullptr);

/// Requires a trained run. Throws ContractViolation on a line-count mismatch.
std::vector<std::string> translate(Translator& translator, const RunRecord& run,
                                   const std::vector<std::string>& source, const DecodeConfig& decode,
                                   const fs::path& work_dir);

struct FitJob {
  std::string translator_spec;
  VariantSpec variant;
};

struct FitOutcome {
  FitJob job;
  std::optional<RunRecord> record;
  std::string error;  // set when fit threw (e.g. unmaterialized variant)
  bool skipped = false;  // an existing trained run was reused
};

/// Runs fit for every job with at most `workers` in flight. A failing job
/// never stops the others. Outcomes keep the input order.
std::vector<FitOutcome> run_fit_jobs(const std::vector<FitJob>& jobs, const TrainConfig& config,
                                     const FitOptions& options, std::size_t workers,
                                     const fs::path& config_dir = {});

}  // namespace seqpipe

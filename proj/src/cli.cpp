#include "seqpipe/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/base_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "seqpipe/error.hpp"
#include "seqpipe/io.hpp"
#include "seqpipe/pipeline.hpp"

namespace seqpipe::cli {

namespace {

// One JSON object per line: ts, level, command, msg.
class JsonlSink : public spdlog::sinks::base_sink<std::mutex> {
 public:
  JsonlSink(const fs::path& path, std::string command) : out_(path, std::ios::app), command_(std::move(command)) {}

 protected:
  void sink_it_(const spdlog::details::log_msg& msg) override {
    auto secs = std::chrono::duration_cast<std::chrono::milliseconds>(msg.time.time_since_epoch()).count();
    nlohmann::json j = {{"ts_ms", secs},
                        {"level", std::string(spdlog::level::to_string_view(msg.level).data(),
                                              spdlog::level::to_string_view(msg.level).size())},
                        {"command", command_},
                        {"msg", std::string(msg.payload.data(), msg.payload.size())}};
    out_ << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
  }
  void flush_() override { out_.flush(); }

 private:
  std::ofstream out_;
  std::string command_;
};

void setup_logging(const fs::path& base, const std::string& command, bool file_log) {
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  console->set_level(spdlog::level::warn);
  std::vector<spdlog::sink_ptr> sinks{console};
  if (file_log) {
    fs::create_directories(base / "logs");
    auto jsonl = std::make_shared<JsonlSink>(base / "logs" / "seqpipe.jsonl", command);
    jsonl->set_level(spdlog::level::debug);
    sinks.push_back(jsonl);
  }
  auto logger = std::make_shared<spdlog::logger>("seqpipe", sinks.begin(), sinks.end());
  logger->set_level(spdlog::level::debug);
  logger->flush_on(spdlog::level::debug);
  spdlog::set_default_logger(logger);
}

}  // namespace

int run(int argc, char** argv) { return run(argc, argv, std::cout); }

int run(int argc, char** argv, std::ostream& out) {
  CLI::App app{"Build dataset variants, fit translators, evaluate and report."};
  app.require_subcommand(1);

  std::string config_path = "seqpipe.toml";
  std::size_t jobs = 0;
  bool force = false;
  bool non_interactive = false;
  std::string scope;
  std::vector<std::string> report_names;

  app.add_option("-c,--config", config_path, "experiment config (TOML)");
  app.add_option("-j,--jobs", jobs, "parallel workers (default: config value)");
  app.add_flag("-f,--force", force, "redo completed work");
  app.add_flag("--non-interactive", non_interactive, "create directories without prompting");
  app.add_option("--scope", scope, "evaluation scope")->check(CLI::IsMember({"own", "compatible"}));

  app.add_subcommand("build", "create layout, splits, variants and stats")->fallthrough();
  app.add_subcommand("stats", "print and refresh variant statistics")->fallthrough();
  app.add_subcommand("fit", "train every translator on every variant")->fallthrough();
  app.add_subcommand("evaluate", "score trained runs on their test sets")->fallthrough();
  auto* report = app.add_subcommand("report", "collect results and write reports")->fallthrough();
  report->add_option("names", report_names, "reports to generate (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }
  std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (const char* env = std::getenv(kBasePathEnv); env && *env) cfg.base_path = fs::absolute(env);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  CommandOptions opts;
  opts.jobs = jobs ? jobs : cfg.jobs;
  opts.force = force;
  // Only build prompts; the other commands never create directories interactively.
  opts.interactive = command == "build" && cfg.interactive && !non_interactive;
  if (!scope.empty()) opts.scope = parse_eval_scope(scope);
  opts.reports = report_names;

  bool file_log = !opts.interactive || fs::is_directory(cfg.base_path);
  try {
    setup_logging(cfg.base_path, command, file_log);
  } catch (const std::exception& e) {
    std::cerr << "cannot open log under " << cfg.base_path.string() << ": " << e.what() << "\n";
  }
  spdlog::info("{} started with config {}", command, fs::absolute(config_path).string());

  int code = kExitOk;
  if (command == "build") code = cmd_build(cfg, opts, out);
  else if (command == "stats") code = cmd_stats(cfg, opts, out);
  else if (command == "fit") code = cmd_fit(cfg, opts, out);
  else if (command == "evaluate") code = cmd_evaluate(cfg, opts, out);
  else code = cmd_report(cfg, opts, out);

  spdlog::info("{} finished with exit code {}", command, code);
  spdlog::shutdown();
  return code;
}

}  // namespace seqpipe::cli

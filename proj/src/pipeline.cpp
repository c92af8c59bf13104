#include "seqpipe/pipeline.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include <spdlog/spdlog.h>

#include "seqpipe/corpus_stats.hpp"
#include "seqpipe/error.hpp"
#include "seqpipe/io.hpp"
#include "seqpipe/parallel.hpp"
#include "seqpipe/variant_store.hpp"

namespace seqpipe {

namespace {

const DatasetConfig* find_dataset(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& d : cfg.datasets)
    if (d.decl.name == name) return &d;
  return nullptr;
}

DatasetRef original_of(DatasetRef ref) {
  ref.size = SizeSpec{};
  return ref;
}

void prepare_splits_impl(const ExperimentConfig& cfg, const DatasetRef& ref, int depth) {
  if (depth > static_cast<int>(cfg.datasets.size()) + 1)
    throw ConfigError("dataset '" + ref.name + "' is derived from itself");

  switch (probe_data(ref)) {
    case DataSource::splits:
      return;
    case DataSource::raw:
      write_splits(ref, make_splits(read_raw(ref), cfg.splits));
      spdlog::info("split raw corpus of {}", ref.id());
      return;
    case DataSource::derived: {
      DatasetRef original = original_of(ref);
      prepare_splits_impl(cfg, original, depth + 1);
      write_splits(ref, subset_training(read_splits(original), *ref.size.limit));
      spdlog::info("subset {} from {}", ref.id(), original.id());
      return;
    }
    case DataSource::none:
      break;
  }

  const DatasetConfig* dc = find_dataset(cfg, ref.name);
  if (!dc || !dc->derive)
    throw PreconditionError("no split or raw files for dataset " + ref.id() + " under " +
                            layout::dataset_dir(ref).string());

  DatasetRef original = original_of(ref);
  if (probe_data(original) == DataSource::none) {
    DatasetRef source{dc->derive->source, ref.languages, SizeSpec{}, ref.base_path};
    prepare_splits_impl(cfg, source, depth + 1);
    write_splits(original, filter_pairs(read_splits(source), dc->derive->filter));
    spdlog::info("filtered {} from {}", original.id(), source.id());
  }
  if (ref.size.limit) {
    prepare_splits_impl(cfg, original, depth + 1);
    write_splits(ref, subset_training(read_splits(original), *ref.size.limit));
  }
}

EvalScope scope_of(const ExperimentConfig& cfg, const CommandOptions& opts) { return opts.scope.value_or(cfg.scope); }

// Variants of the datasets whose splits are on disk.
std::vector<VariantSpec> ready_variants(const ExperimentConfig& cfg, std::ostream& out, bool& problems) {
  auto index = index_datasets(cfg.base_path, cfg.decls());
  for (const auto& m : index.missing) {
    out << "missing dataset " << m.ref.id() << ": " << m.reason << "\n";
    problems = true;
  }
  for (const auto& m : index.errors) {
    out << "malformed dataset " << m.ref.id() << ": " << m.reason << "\n";
    problems = true;
  }
  return enumerate_variants(index.refs, cfg.normalization, cfg.subword);
}

template <typename Fn>
int guarded(const char* command, std::ostream& out, Fn&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    spdlog::error("{}: {}", command, e.what());
    out << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}: {}", command, e.what());
    out << command << " failed: " << e.what() << "\n";
    return kExitSomeFailed;
  }
}

}  // namespace

void prepare_splits(const ExperimentConfig& cfg, const DatasetRef& ref) { prepare_splits_impl(cfg, ref, 0); }

DatasetStats emit_variant_stats(const VariantSpec& v) {
  auto art = VariantArtifacts::load(v);
  auto splits = normalize_splits(read_splits(v.dataset), v.normalization);
  auto stats = compute_stats(splits, SideModels{&art.src_model, &art.trg_model});
  stats.dataset_id = v.dataset.id();
  stats.variant = v.dir_name();
  emit_stats(stats, v.stats_dir());
  return stats;
}

std::vector<VariantSpec> configured_variants(const ExperimentConfig& cfg) {
  auto index = index_datasets(cfg.base_path, cfg.decls());
  return enumerate_variants(index.refs, cfg.normalization, cfg.subword);
}

int cmd_build(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  return guarded("build", out, [&] {
    auto refs = expand_refs(cfg.base_path, cfg.decls());
    // Enumerate up front so a bad subword plan fails before anything is written.
    enumerate_variants(refs, cfg.normalization, cfg.subword);

    for (const auto& ref : refs) {
      auto made = ensure_layout(ref, opts.interactive, opts.confirm);
      if (made.declined) {
        out << "directory creation declined; nothing built\n";
        return kExitConfigError;
      }
      for (const auto& dir : made.created) spdlog::debug("created {}", dir.string());
    }

    bool problems = false;
    std::vector<DatasetRef> ready;
    for (const auto& ref : refs) {
      try {
        prepare_splits(cfg, ref);
        ready.push_back(ref);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        out << "dataset " << ref.id() << ": " << e.what() << "\n";
        spdlog::error("dataset {}: {}", ref.id(), e.what());
        problems = true;
      }
    }

    auto variants = enumerate_variants(ready, cfg.normalization, cfg.subword);
    enum class State { built, existing, failed };
    std::vector<State> state(variants.size(), State::failed);
    std::vector<std::string> errors(variants.size());
    std::size_t jobs = opts.jobs ? opts.jobs : cfg.jobs;
    parallel_for(variants.size(), jobs, [&](std::size_t i) {
      const auto& v = variants[i];
      try {
        if (!opts.force && is_materialized(v)) {
          if (!fs::exists(v.stats_dir() / "stats.json")) emit_variant_stats(v);
          state[i] = State::existing;
          return;
        }
        materialize_variant(v, read_splits(v.dataset), cfg.tokenizer);
        emit_variant_stats(v);
        state[i] = State::built;
        spdlog::info("built variant {}", v.key());
      } catch (const std::exception& e) {
        errors[i] = e.what();
        spdlog::error("variant {}: {}", v.key(), e.what());
      }
    });

    std::size_t built = 0, existing = 0, failed = 0;
    for (std::size_t i = 0; i < variants.size(); ++i) {
      switch (state[i]) {
        case State::built:
          ++built;
          out << "  built    " << variants[i].key() << "\n";
          break;
        case State::existing:
          ++existing;
          break;
        case State::failed:
          ++failed;
          out << "  FAILED   " << variants[i].key() << ": " << errors[i] << "\n";
          break;
      }
    }
    out << "summary: " << variants.size() << " variants (" << built << " new variants, " << existing
        << " already built";
    if (failed) out << ", " << failed << " failed";
    out << ")\n";
    return (failed || problems) ? kExitSomeFailed : kExitOk;
  });
}

int cmd_stats(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  return guarded("stats", out, [&] {
    bool problems = false;
    auto variants = ready_variants(cfg, out, problems);
    out << "variant\ttrain_sentences\tsrc_tokens_per_sentence\ttrg_tokens_per_sentence\n";
    for (const auto& v : variants) {
      if (!is_materialized(v)) {
        out << v.key() << "\tnot built\n";
        problems = true;
        continue;
      }
      try {
        fs::path file = v.stats_dir() / "stats.json";
        DatasetStats stats =
            (!opts.force && fs::exists(file)) ? stats_from_json(io::read_json(file)) : emit_variant_stats(v);
        const auto& train = stats.split("train");
        out << v.key() << "\t" << train.src.sentence_count << "\t" << io::format_2dp(train.src.mean_length)
            << "\t" << io::format_2dp(train.trg.mean_length) << "\n";
      } catch (const std::exception& e) {
        out << v.key() << "\terror: " << e.what() << "\n";
        problems = true;
      }
    }
    return problems ? kExitSomeFailed : kExitOk;
  });
}

int cmd_fit(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  return guarded("fit", out, [&] {
    bool problems = false;
    auto variants = ready_variants(cfg, out, problems);
    // Resolve translators once so a bad spec is a config error, not N failures.
    for (const auto& spec : cfg.translators) make_translator(spec, cfg.config_dir);

    std::vector<FitJob> jobs;
    for (const auto& v : variants)
      for (const auto& spec : cfg.translators) jobs.push_back({spec, v});

    std::size_t workers = opts.jobs ? opts.jobs : cfg.jobs;
    auto outcomes = run_fit_jobs(jobs, cfg.train, FitOptions{opts.force}, workers, cfg.config_dir);

    std::size_t trained = 0, reused = 0, failed = 0;
    out << "run\tstatus\n";
    for (const auto& o : outcomes) {
      if (!o.record) {
        ++failed;
        out << o.job.variant.key() << " [" << o.job.translator_spec << "]\terror: " << o.error << "\n";
        continue;
      }
      const auto& r = *o.record;
      out << r.run_id << "\t";
      if (r.status == RunStatus::trained) {
        o.skipped ? ++reused : ++trained;
        out << (o.skipped ? "trained (existing)" : "trained") << "\n";
      } else {
        ++failed;
        out << to_string(r.status);
        if (r.failure)
          out << " in " << r.failure->stage << " (exit " << r.failure->exit_code << "): " << r.failure->message;
        out << "\n";
      }
    }
    out << "summary: " << outcomes.size() << " runs (" << trained << " trained, " << reused << " already trained, "
        << failed << " failed)\n";
    return (failed || problems) ? kExitSomeFailed : kExitOk;
  });
}

int cmd_evaluate(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  return guarded("evaluate", out, [&] {
    bool problems = false;
    auto index = index_datasets(cfg.base_path, cfg.decls());
    for (const auto& m : index.missing) out << "missing dataset " << m.ref.id() << ": " << m.reason << "\n";
    auto variants = enumerate_variants(index.refs, cfg.normalization, cfg.subword);
    EvalScope scope = scope_of(cfg, opts);

    std::size_t workers = opts.jobs ? opts.jobs : cfg.jobs;
    std::size_t scored = 0, failures = 0;
    out << "run\teval_dataset\tmetric\tbeam\tscore\n";
    for (const auto& spec : cfg.translators) {
      auto translator = make_translator(spec, cfg.config_dir);
      for (const auto& v : variants) {
        std::string run_id = make_run_id(v, translator->identity());
        fs::path dir = run_dir_for(v, run_id);
        if (!fs::exists(run_record_path(dir))) {
          out << run_id << "\tnot fitted\n";
          ++failures;
          continue;
        }
        RunRecord run = load_run(dir);
        if (run.status != RunStatus::trained) {
          out << run_id << "\tskipped: run status " << to_string(run.status) << "\n";
          ++failures;
          continue;
        }
        std::vector<DatasetRef> datasets =
            scope == EvalScope::own ? std::vector<DatasetRef>{v.dataset} : compatible_datasets(run, index.refs);
        for (auto beam : cfg.beams) {
          DecodeConfig decode{beam, cfg.max_output_length};
          auto report = evaluate_run(*translator, run, datasets, cfg.metrics, decode,
                                     EvaluateOptions{opts.force, workers});
          for (const auto& r : report.results) {
            ++scored;
            out << run_id << "\t" << r.eval_dataset.id() << "\t" << r.metric << "\t" << beam << "\t"
                << io::format_2dp(r.score) << "\n";
          }
          for (const auto& f : report.failures) {
            ++failures;
            out << run_id << "\t" << f.eval_dataset << "\t" << (f.metric.empty() ? "-" : f.metric) << "\t" << beam
                << "\tFAILED: " << f.message << "\n";
          }
        }
      }
    }
    out << "summary: " << scored << " scores, " << failures << " failures (scope " << to_string(scope) << ")\n";
    return (failures || problems) ? kExitSomeFailed : kExitOk;
  });
}

int cmd_report(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  return guarded("report", out, [&] {
    std::vector<const ReportSpec*> selected;
    if (opts.reports.empty()) {
      for (const auto& r : cfg.reports) selected.push_back(&r);
    } else {
      for (const auto& name : opts.reports) {
        const ReportSpec* r = cfg.find_report(name);
        if (!r) throw ConfigError("report '" + name + "' is not defined in the config");
        selected.push_back(r);
      }
    }

    auto collected = collect(cfg.base_path);
    for (const auto& w : collected.warnings) out << "warning: skipped " << w << "\n";
    const ReportTable& table = collected.table;
    fs::path reports_dir = cfg.base_path / "reports";
    io::write_file_atomic(reports_dir / "table.csv", table.to_csv());
    io::write_json(reports_dir / "table.json", table.to_json());
    out << "collected " << table.rows.size() << " rows into " << (reports_dir / "table.csv").string() << "\n";

    std::size_t failed = 0;
    for (const ReportSpec* spec : selected) {
      fs::path dir = reports_dir / spec->name;
      try {
        ReportTable scoped = spec->scope == EvalScope::own ? own_evaluations(table) : table;
        switch (spec->type) {
          case ReportType::metric:
            metric_report(scoped, spec->group_by, spec->metrics, dir);
            break;
          case ReportType::cross_dataset:
            cross_dataset_matrix(scoped, spec->metric, dir);
            break;
          case ReportType::multivariable:
            multivariable_report(scoped, spec->x, spec->y, dir, spec->series_by);
            break;
          case ReportType::comparison: {
            auto cmp = system_comparison(scoped, spec->system_a, spec->system_b, spec->metric);
            write_comparison(cmp, dir);
            out << spec->name << ": mean " << spec->metric << " difference (" << spec->system_b << " - "
                << spec->system_a << ") " << io::format_2dp(cmp.signed_mean) << " over " << cmp.rows.size()
                << " pairs\n";
            break;
          }
        }
        out << "report " << spec->name << " -> " << dir.string() << "\n";
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        ++failed;
        out << "report " << spec->name << " FAILED: " << e.what() << "\n";
        spdlog::error("report {}: {}", spec->name, e.what());
      }
    }
    out << "summary: " << selected.size() << " reports (" << failed << " failed)\n";
    return failed ? kExitSomeFailed : kExitOk;
  });
}

}  // namespace seqpipe

#include "seqpipe/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "toml.hpp"

#include "seqpipe/error.hpp"
#include "seqpipe/io.hpp"

namespace seqpipe {

namespace {

std::string type_name(const toml::node& n) {
  switch (n.type()) {
    case toml::node_type::string: return "string";
    case toml::node_type::integer: return "integer";
    case toml::node_type::floating_point: return "float";
    case toml::node_type::boolean: return "boolean";
    case toml::node_type::array: return "array";
    case toml::node_type::table: return "table";
    default: return "value";
  }
}

// One TOML table being read; every key must be consumed or finish() throws.
class Section {
 public:
  Section(const toml::table& t, std::string where) : t_(t), where_(std::move(where)) {}

  std::string path(std::string_view key) const { return where_.empty() ? std::string(key) : where_ + "." + std::string(key); }

  const toml::node* node(std::string_view key) {
    used_.insert(std::string(key));
    return t_.get(key);
  }

  std::optional<std::string> str(std::string_view key) {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value<std::string>(); v && n->is_string()) return *v;
    throw ConfigError(path(key) + ": expected a string, got " + type_name(*n));
  }

  std::optional<std::int64_t> integer(std::string_view key, std::int64_t min = 0) {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (!n->is_integer()) throw ConfigError(path(key) + ": expected an integer, got " + type_name(*n));
    auto v = *n->value<std::int64_t>();
    if (v < min) throw ConfigError(path(key) + ": must be at least " + std::to_string(min));
    return v;
  }

  std::optional<double> number(std::string_view key) {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (!n->is_number()) throw ConfigError(path(key) + ": expected a number, got " + type_name(*n));
    return *n->value<double>();
  }

  std::optional<bool> boolean(std::string_view key) {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (!n->is_boolean()) throw ConfigError(path(key) + ": expected a boolean, got " + type_name(*n));
    return *n->value<bool>();
  }

  const toml::array* array(std::string_view key) {
    const auto* n = node(key);
    if (!n) return nullptr;
    if (!n->is_array()) throw ConfigError(path(key) + ": expected an array, got " + type_name(*n));
    return n->as_array();
  }

  std::optional<std::vector<std::string>> strings(std::string_view key) {
    const auto* a = array(key);
    if (!a) return std::nullopt;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < a->size(); ++i) {
      const auto& e = *a->get(i);
      if (!e.is_string()) throw ConfigError(path(key) + "[" + std::to_string(i) + "]: expected a string");
      out.push_back(*e.value<std::string>());
    }
    return out;
  }

  std::optional<std::vector<std::int64_t>> integers(std::string_view key, std::int64_t min = 0) {
    const auto* a = array(key);
    if (!a) return std::nullopt;
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < a->size(); ++i) {
      const auto& e = *a->get(i);
      if (!e.is_integer()) throw ConfigError(path(key) + "[" + std::to_string(i) + "]: expected an integer");
      auto v = *e.value<std::int64_t>();
      if (v < min) throw ConfigError(path(key) + "[" + std::to_string(i) + "]: must be at least " + std::to_string(min));
      out.push_back(v);
    }
    return out;
  }

  const toml::table* table(std::string_view key) {
    const auto* n = node(key);
    if (!n) return nullptr;
    if (!n->is_table()) throw ConfigError(path(key) + ": expected a table, got " + type_name(*n));
    return n->as_table();
  }

  template <typename Fn>
  void tables(std::string_view key, Fn&& fn) {
    const auto* a = array(key);
    if (!a) return;
    for (std::size_t i = 0; i < a->size(); ++i) {
      const auto* t = a->get(i)->as_table();
      if (!t) throw ConfigError(path(key) + "[" + std::to_string(i) + "]: expected a table");
      Section s(*t, path(key) + "[" + std::to_string(i) + "]");
      fn(s);
      s.finish();
    }
  }

  void finish() const {
    for (const auto& [k, v] : t_)
      if (!used_.count(std::string(k.str()))) throw ConfigError("unknown key '" + path(k.str()) + "'");
  }

  const std::string& where() const { return where_; }

 private:
  const toml::table& t_;
  std::string where_;
  std::set<std::string> used_;
};

template <typename T>
T required(std::optional<T> v, const Section& s, std::string_view key) {
  if (!v) throw ConfigError(s.path(key) + ": required");
  return std::move(*v);
}

std::vector<NormalizationStep> parse_normalization(Section& root) {
  std::vector<NormalizationStep> steps;
  const auto* a = root.array("normalization");
  if (!a) return steps;
  for (std::size_t i = 0; i < a->size(); ++i) {
    const auto& e = *a->get(i);
    std::string where = "normalization[" + std::to_string(i) + "]";
    if (e.is_string()) {
      std::string name = *e.value<std::string>();
      try {
        steps.push_back(NormalizationStep::make(parse_normalization_kind(name)));
      } catch (const Error& err) {
        throw ConfigError(where + ": " + err.what());
      }
      if (steps.back().kind == NormalizationKind::replace)
        throw ConfigError(where + ": replace steps are written as tables {replace = ..., with = ...}");
    } else if (const auto* t = e.as_table()) {
      Section s(*t, where);
      std::string pattern = required(s.str("replace"), s, "replace");
      std::string with = s.str("with").value_or("");
      bool regex = s.boolean("regex").value_or(false);
      s.finish();
      steps.push_back(regex ? NormalizationStep::regex_replace(pattern, with) : NormalizationStep::literal(pattern, with));
    } else {
      throw ConfigError(where + ": expected a step name or a replace table");
    }
  }
  Normalizer check(steps);  // rejects empty patterns and bad regexes
  return steps;
}

PairFilter parse_filter(Section& s, const std::string& what) {
  auto lang = s.str("language");
  auto domain = s.str("domain");
  auto tag = s.str("leading_tag");
  auto strip = s.boolean("strip_tag");
  auto column = s.str("column");
  int n = (lang ? 1 : 0) + (domain ? 1 : 0) + (tag ? 1 : 0);
  if (n != 1) throw ConfigError(what + ": give exactly one of language, domain, leading_tag");
  if (strip && !tag) throw ConfigError(what + ": strip_tag only applies to leading_tag");
  if (column && tag) throw ConfigError(what + ": column does not apply to leading_tag");
  if (lang) return LanguageFilter{*lang, column.value_or("lang")};
  if (domain) return DomainFilter{*domain, column.value_or("domain")};
  return LeadingTagFilter{*tag, strip.value_or(false)};
}

MetricSpec parse_metric_name(const std::string& name, const BleuConfig& bleu, const ChrfConfig& chrf,
                             const std::string& where) {
  if (name == "bleu") return MetricSpec::make_bleu(bleu);
  if (name == "chrf") return MetricSpec::make_chrf(chrf);
  throw ConfigError(where + ": unknown metric '" + name + "' (bleu, chrf, or declare it under external_metrics)");
}

ReportType parse_report_type(const std::string& s, const std::string& where) {
  if (s == "metric") return ReportType::metric;
  if (s == "cross_dataset") return ReportType::cross_dataset;
  if (s == "multivariable") return ReportType::multivariable;
  if (s == "comparison") return ReportType::comparison;
  throw ConfigError(where + ": unknown report type '" + s + "' (metric, cross_dataset, multivariable, comparison)");
}

AxisSide parse_axis(const std::string& s, const std::string& where) {
  if (s == "left") return AxisSide::left;
  if (s == "right") return AxisSide::right;
  throw ConfigError(where + ": axis must be left or right");
}

}  // namespace

std::string_view to_string(EvalScope s) { return s == EvalScope::own ? "own" : "compatible"; }

EvalScope parse_eval_scope(std::string_view s) {
  if (s == "own") return EvalScope::own;
  if (s == "compatible") return EvalScope::compatible;
  throw ConfigError("scope must be own or compatible, got '" + std::string(s) + "'");
}

std::vector<DatasetDecl> ExperimentConfig::decls() const {
  std::vector<DatasetDecl> out;
  for (const auto& d : datasets) out.push_back(d.decl);
  return out;
}

const ReportSpec* ExperimentConfig::find_report(std::string_view name) const {
  for (const auto& r : reports)
    if (r.name == name) return &r;
  return nullptr;
}

ExperimentConfig parse_config(std::string_view toml_text, const fs::path& config_dir) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    const auto& pos = e.source().begin;
    throw ConfigError("config syntax error at line " + std::to_string(pos.line) + ", column " +
                      std::to_string(pos.column) + ": " + std::string(e.description()));
  }

  ExperimentConfig cfg;
  cfg.config_dir = config_dir;
  Section root(doc, "");

  fs::path base = required(root.str("base_path"), root, "base_path");
  cfg.base_path = base.is_relative() ? config_dir / base : base;
  cfg.interactive = root.boolean("interactive").value_or(true);
  cfg.jobs = static_cast<std::size_t>(root.integer("jobs", 1).value_or(1));

  std::set<std::string> names;
  root.tables("datasets", [&](Section& s) {
    DatasetConfig d;
    d.decl.name = required(s.str("name"), s, "name");
    if (!names.insert(d.decl.name).second) throw ConfigError(s.path("name") + ": dataset '" + d.decl.name + "' declared twice");
    for (const auto& p : required(s.strings("languages"), s, "languages")) {
      try {
        d.decl.languages.push_back(LanguagePair::parse(p));
      } catch (const Error& e) {
        throw ConfigError(s.path("languages") + ": " + e.what());
      }
    }
    if (d.decl.languages.empty()) throw ConfigError(s.path("languages") + ": at least one language pair");
    for (const auto& label : s.strings("sizes").value_or(std::vector<std::string>{"original"})) {
      try {
        d.decl.sizes.push_back(SizeSpec::from_label(label));
      } catch (const Error& e) {
        throw ConfigError(s.path("sizes") + ": " + e.what());
      }
    }
    if (d.decl.sizes.empty()) throw ConfigError(s.path("sizes") + ": at least one size");
    d.decl.allow_same_language = s.boolean("allow_same_language").value_or(false);
    for (const auto& lp : d.decl.languages)
      if (lp.src == lp.trg && !d.decl.allow_same_language)
        throw ConfigError(s.path("languages") + ": '" + lp.src + "-" + lp.trg +
                          "' has the same source and target language (set allow_same_language to permit it)");
    if (const auto* t = s.table("derive")) {
      Section ds(*t, s.path("derive"));
      DerivedFrom from;
      from.source = required(ds.str("from"), ds, "from");
      from.filter = parse_filter(ds, ds.where());
      ds.finish();
      d.derive = std::move(from);
    }
    cfg.datasets.push_back(std::move(d));
  });
  for (const auto& d : cfg.datasets)
    if (d.derive && !names.count(d.derive->source))
      throw ConfigError("dataset '" + d.decl.name + "' derives from undeclared dataset '" + d.derive->source + "'");

  if (const auto* t = root.table("splits")) {
    Section s(*t, "splits");
    cfg.splits.val_size = static_cast<std::size_t>(s.integer("val_size").value_or(0));
    cfg.splits.test_size = static_cast<std::size_t>(s.integer("test_size").value_or(0));
    cfg.splits.seed = static_cast<std::uint64_t>(s.integer("seed").value_or(1234));
    s.finish();
  }

  cfg.normalization = parse_normalization(root);

  root.tables("subword", [&](Section& s) {
    SubwordPlanEntry e;
    std::string model = required(s.str("model"), s, "model");
    try {
      e.scheme = parse_subword_scheme(model);
    } catch (const Error& err) {
      throw ConfigError(s.path("model") + ": " + err.what());
    }
    for (auto v : s.integers("vocab_sizes", 1).value_or(std::vector<std::int64_t>{}))
      e.vocab_sizes.push_back(static_cast<std::uint32_t>(v));
    if (e.vocab_sizes.empty() && requires_vocab_size(e.scheme))
      throw ConfigError(s.path("vocab_sizes") + ": '" + model + "' needs at least one vocab size");
    cfg.subword.push_back(std::move(e));
  });

  if (const auto* t = root.table("tokenizer")) {
    Section s(*t, "tokenizer");
    auto& u = cfg.tokenizer.unigram;
    u.max_piece_chars = static_cast<std::size_t>(s.integer("max_piece_chars", 1).value_or(static_cast<std::int64_t>(u.max_piece_chars)));
    u.seed_size_factor = static_cast<std::size_t>(s.integer("seed_size_factor", 1).value_or(static_cast<std::int64_t>(u.seed_size_factor)));
    u.em_rounds_per_step = static_cast<int>(s.integer("em_rounds", 1).value_or(u.em_rounds_per_step));
    u.prune_fraction = s.number("prune_fraction").value_or(u.prune_fraction);
    if (u.prune_fraction <= 0 || u.prune_fraction >= 1) throw ConfigError("tokenizer.prune_fraction must be in (0, 1)");
    s.finish();
  }

  if (const auto* t = root.table("training")) {
    Section s(*t, "training");
    if (auto tr = s.strings("translators")) cfg.translators = *tr;
    if (cfg.translators.empty()) throw ConfigError("training.translators: at least one translator");
    cfg.train.epochs = static_cast<std::uint32_t>(s.integer("epochs", 1).value_or(1));
    cfg.train.batch_size = static_cast<std::uint32_t>(s.integer("batch_size", 1).value_or(32));
    cfg.train.seed = static_cast<std::uint64_t>(s.integer("seed").value_or(1234));
    if (const auto* opts = s.table("options")) {
      std::ostringstream os;
      os << toml::json_formatter{*opts};
      cfg.train.options = nlohmann::json::parse(os.str());
    }
    s.finish();
  }

  if (const auto* t = root.table("evaluation")) {
    Section s(*t, "evaluation");
    BleuConfig bleu;
    ChrfConfig chrf;
    if (auto sm = s.str("bleu_smoothing")) {
      try {
        bleu.smoothing = parse_bleu_smoothing(*sm);
      } catch (const Error& e) {
        throw ConfigError(std::string("evaluation.bleu_smoothing: ") + e.what());
      }
    }
    bleu.epsilon = s.number("bleu_epsilon").value_or(bleu.epsilon);
    chrf.word_order = static_cast<int>(s.integer("chrf_word_order").value_or(0));
    chrf.beta = s.number("chrf_beta").value_or(chrf.beta);
    if (chrf.beta <= 0) throw ConfigError("evaluation.chrf_beta must be positive");

    std::vector<MetricSpec> externals;
    s.tables("external_metrics", [&](Section& es) {
      MetricSpec m;
      m.name = required(es.str("name"), es, "name");
      if (m.name == "bleu" || m.name == "chrf") throw ConfigError(es.path("name") + ": '" + m.name + "' is built in");
      CommandTemplate tmpl;
      tmpl.stage = "metric_" + m.name;
      tmpl.argv = required(es.strings("argv"), es, "argv");
      if (!tmpl.argv.empty() && tmpl.argv[0].find('/') != std::string::npos && fs::path(tmpl.argv[0]).is_relative())
        tmpl.argv[0] = (config_dir / tmpl.argv[0]).string();
      tmpl.validate();
      m.external = std::move(tmpl);
      externals.push_back(std::move(m));
    });

    auto names_list = s.strings("metrics").value_or(std::vector<std::string>{"bleu", "chrf"});
    cfg.metrics.clear();
    for (const auto& n : names_list) {
      auto it = std::find_if(externals.begin(), externals.end(), [&](const MetricSpec& m) { return m.name == n; });
      cfg.metrics.push_back(it != externals.end() ? *it : parse_metric_name(n, bleu, chrf, "evaluation.metrics"));
    }
    if (cfg.metrics.empty()) throw ConfigError("evaluation.metrics: at least one metric");

    if (auto beams = s.integers("beams", 1)) {
      cfg.beams.clear();
      for (auto b : *beams) cfg.beams.push_back(static_cast<std::uint32_t>(b));
      if (cfg.beams.empty()) throw ConfigError("evaluation.beams: at least one beam width");
    }
    cfg.max_output_length = static_cast<std::uint32_t>(s.integer("max_output_length", 1).value_or(256));
    if (auto sc = s.str("scope")) cfg.scope = parse_eval_scope(*sc);
    s.finish();
  }

  std::set<std::string> report_names;
  root.tables("reports", [&](Section& s) {
    ReportSpec r;
    r.name = required(s.str("name"), s, "name");
    if (!report_names.insert(r.name).second) throw ConfigError(s.path("name") + ": report '" + r.name + "' declared twice");
    r.type = parse_report_type(required(s.str("type"), s, "type"), s.path("type"));
    if (auto v = s.strings("metrics")) r.metrics = *v;
    if (auto v = s.strings("group_by")) r.group_by = *v;
    if (auto v = s.str("metric")) r.metric = *v;
    if (auto v = s.str("x")) r.x = *v;
    if (auto v = s.strings("series_by")) r.series_by = *v;
    r.scope = r.type == ReportType::multivariable ? EvalScope::own : EvalScope::compatible;
    if (auto v = s.str("scope")) r.scope = parse_eval_scope(*v);
    if (auto v = s.str("system_a")) r.system_a = *v;
    if (auto v = s.str("system_b")) r.system_b = *v;
    if (const auto* ys = s.array("y")) {
      for (std::size_t i = 0; i < ys->size(); ++i) {
        const auto& e = *ys->get(i);
        std::string where = s.path("y") + "[" + std::to_string(i) + "]";
        if (e.is_string()) {
          r.y.push_back({*e.value<std::string>(), i == 0 ? AxisSide::left : AxisSide::right});
        } else if (const auto* t = e.as_table()) {
          Section ys2(*t, where);
          YVariable y{required(ys2.str("variable"), ys2, "variable"), i == 0 ? AxisSide::left : AxisSide::right};
          if (auto ax = ys2.str("axis")) y.axis = parse_axis(*ax, where);
          ys2.finish();
          r.y.push_back(std::move(y));
        } else {
          throw ConfigError(where + ": expected a variable name or {variable, axis}");
        }
      }
    }
    for (const auto& c : r.group_by)
      if (!is_report_column(c)) throw ConfigError(s.path("group_by") + ": unknown column '" + c + "'");
    for (const auto& c : r.series_by)
      if (!is_report_column(c)) throw ConfigError(s.path("series_by") + ": unknown column '" + c + "'");
    if (r.type == ReportType::multivariable) {
      if (!is_report_column(r.x) || !is_numeric_column(r.x))
        throw ConfigError(s.path("x") + ": '" + r.x + "' is not a numeric column");
      if (r.y.empty()) r.y = {{"bleu", AxisSide::left}, {"tokens_per_sentence", AxisSide::right}};
    }
    if (r.type == ReportType::comparison && (r.system_a.empty() || r.system_b.empty()))
      throw ConfigError(s.where() + ": comparison reports need system_a and system_b");
    cfg.reports.push_back(std::move(r));
  });

  root.finish();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, fs::absolute(path).parent_path());
}

}  // namespace seqpipe

#include "seqpipe/reporting.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "seqpipe/error.hpp"
#include "seqpipe/evaluation.hpp"
#include "seqpipe/io.hpp"
#include "seqpipe/svg.hpp"
#include "seqpipe/translator.hpp"

namespace seqpipe {

namespace {

template <typename T>
std::optional<T> parse_number(std::string_view text, std::string_view column) {
  if (text.empty()) return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError("column " + std::string(column) + ": '" + std::string(text) + "' is not a number");
  return value;
}

bool is_integer_column(std::string_view c) { return c == "vocab_size" || c == "train_limit" || c == "beam"; }

// Two-decimal text for reports; integer columns stay integers.
std::string report_text(std::string_view column, double value) {
  if (is_integer_column(column)) return std::to_string(static_cast<std::uint64_t>(value));
  return io::format_2dp(value);
}

std::string report_cell(const ReportRow& row, std::string_view column) {
  if (is_numeric_column(column)) {
    auto v = numeric_cell(row, column);
    return v ? report_text(column, *v) : "";
  }
  return cell(row, column);
}

std::string row_key(const ReportRow& r) {
  return r.run_id + " | " + r.eval_dataset + " | " + r.metric + " | beam " + std::to_string(r.beam);
}

void check_columns(const std::vector<std::string>& cols, std::string_view what) {
  for (const auto& c : cols)
    if (!is_report_column(c)) throw ConfigError("unknown " + std::string(what) + " column '" + c + "'");
}

// Orders rows by the given columns, numerically where the column is numeric.
bool less_by(const ReportRow& a, const ReportRow& b, const std::vector<std::string>& cols) {
  for (const auto& c : cols) {
    if (is_numeric_column(c)) {
      auto x = numeric_cell(a, c), y = numeric_cell(b, c);
      if (x != y) return x < y;
    } else {
      auto x = cell(a, c), y = cell(b, c);
      if (x != y) return x < y;
    }
  }
  return false;
}

std::string join_values(const ReportRow& r, const std::vector<std::string>& cols, std::string_view sep,
                        bool with_names) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += sep;
    if (with_names) out += cols[i] + "=";
    std::string v = cell(r, cols[i]);
    out += v.empty() ? "-" : v;
  }
  return out;
}

void write_report(const fs::path& out_dir, const std::string& type, const nlohmann::json& params,
                  const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                  const std::vector<std::pair<std::string, std::string>>& charts, nlohmann::json extra = {}) {
  std::string csv = io::csv_row(header);
  nlohmann::json json_rows = nlohmann::json::array();
  for (const auto& r : rows) {
    csv += io::csv_row(r);
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < header.size(); ++i) obj[header[i]] = r[i];
    json_rows.push_back(std::move(obj));
  }
  io::write_file_atomic(out_dir / "report.csv", csv);
  nlohmann::json doc = {{"type", type}, {"params", params}, {"columns", header}, {"rows", json_rows}};
  if (!extra.is_null()) doc["summary"] = std::move(extra);
  nlohmann::json chart_names = nlohmann::json::array();
  for (const auto& [name, body] : charts) {
    io::write_file_atomic(out_dir / name, body);
    chart_names.push_back(name);
  }
  doc["charts"] = chart_names;
  io::write_json(out_dir / "report.json", doc);
}

std::string safe_name(std::string_view s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

}  // namespace

bool is_report_column(std::string_view column) {
  return std::find(kReportColumns.begin(), kReportColumns.end(), column) != kReportColumns.end();
}

bool is_numeric_column(std::string_view c) {
  return c == "vocab_size" || c == "train_limit" || c == "beam" || c == "score" || c == "tokens_per_sentence";
}

std::string cell(const ReportRow& r, std::string_view c) {
  if (c == "run_id") return r.run_id;
  if (c == "train_dataset") return r.train_dataset;
  if (c == "eval_dataset") return r.eval_dataset;
  if (c == "translator") return r.translator;
  if (c == "subword_model") return r.subword_model;
  if (c == "vocab_size") return r.vocab_size ? std::to_string(*r.vocab_size) : "";
  if (c == "train_limit") return r.train_limit ? std::to_string(*r.train_limit) : "";
  if (c == "metric") return r.metric;
  if (c == "beam") return std::to_string(r.beam);
  if (c == "score") return io::format_exact(r.score);
  if (c == "tokens_per_sentence") return r.tokens_per_sentence ? io::format_exact(*r.tokens_per_sentence) : "";
  throw ConfigError("unknown report column '" + std::string(c) + "'");
}

std::optional<double> numeric_cell(const ReportRow& r, std::string_view c) {
  if (c == "vocab_size") return r.vocab_size ? std::optional<double>(*r.vocab_size) : std::nullopt;
  if (c == "train_limit") return r.train_limit ? std::optional<double>(static_cast<double>(*r.train_limit)) : std::nullopt;
  if (c == "beam") return r.beam;
  if (c == "score") return r.score;
  if (c == "tokens_per_sentence") return r.tokens_per_sentence;
  throw ConfigError("column '" + std::string(c) + "' is not numeric");
}

void ReportTable::validate() const {
  std::set<std::string> seen;
  std::vector<std::string> dups;
  for (const auto& r : rows)
    if (!seen.insert(row_key(r)).second) dups.push_back(row_key(r));
  if (!dups.empty()) {
    std::string msg = "duplicate report keys:";
    for (const auto& d : dups) msg += "\n  " + d;
    throw DataError(msg);
  }
}

void ReportTable::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.run_id, a.eval_dataset, a.metric, a.beam) < std::tie(b.run_id, b.eval_dataset, b.metric, b.beam);
  });
}

std::string ReportTable::to_csv() const {
  std::string out = io::csv_row(std::vector<std::string>(kReportColumns.begin(), kReportColumns.end()));
  for (const auto& r : rows) {
    std::vector<std::string> fields;
    for (auto c : kReportColumns) fields.push_back(cell(r, c));
    out += io::csv_row(fields);
  }
  return out;
}

ReportTable ReportTable::from_csv(std::string_view text) {
  auto records = io::parse_csv(text);
  ReportTable t;
  if (records.empty()) return t;
  if (records[0] != std::vector<std::string>(kReportColumns.begin(), kReportColumns.end()))
    throw DataError("report table CSV has an unexpected header");
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i];
    if (f.size() != kReportColumns.size())
      throw DataError("report table CSV row " + std::to_string(i + 1) + " has " + std::to_string(f.size()) + " fields");
    ReportRow r;
    r.run_id = f[0];
    r.train_dataset = f[1];
    r.eval_dataset = f[2];
    r.translator = f[3];
    r.subword_model = f[4];
    r.vocab_size = parse_number<std::uint32_t>(f[5], "vocab_size");
    r.train_limit = parse_number<std::uint64_t>(f[6], "train_limit");
    r.metric = f[7];
    r.beam = parse_number<std::uint32_t>(f[8], "beam").value_or(1);
    r.score = parse_number<double>(f[9], "score").value_or(0.0);
    r.tokens_per_sentence = parse_number<double>(f[10], "tokens_per_sentence");
    t.rows.push_back(std::move(r));
  }
  t.validate();
  return t;
}

nlohmann::json ReportTable::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  for (const auto& r : rows)
    arr.push_back({{"run_id", r.run_id},
                   {"train_dataset", r.train_dataset},
                   {"eval_dataset", r.eval_dataset},
                   {"translator", r.translator},
                   {"subword_model", r.subword_model},
                   {"vocab_size", opt(r.vocab_size)},
                   {"train_limit", opt(r.train_limit)},
                   {"metric", r.metric},
                   {"beam", r.beam},
                   {"score", r.score},
                   {"tokens_per_sentence", opt(r.tokens_per_sentence)}});
  return arr;
}

ReportTable ReportTable::from_json(const nlohmann::json& j) {
  ReportTable t;
  for (const auto& o : j) {
    ReportRow r;
    r.run_id = o.at("run_id").get<std::string>();
    r.train_dataset = o.at("train_dataset").get<std::string>();
    r.eval_dataset = o.at("eval_dataset").get<std::string>();
    r.translator = o.at("translator").get<std::string>();
    r.subword_model = o.at("subword_model").get<std::string>();
    if (!o.at("vocab_size").is_null()) r.vocab_size = o["vocab_size"].get<std::uint32_t>();
    if (!o.at("train_limit").is_null()) r.train_limit = o["train_limit"].get<std::uint64_t>();
    r.metric = o.at("metric").get<std::string>();
    r.beam = o.at("beam").get<std::uint32_t>();
    r.score = o.at("score").get<double>();
    if (!o.at("tokens_per_sentence").is_null()) r.tokens_per_sentence = o["tokens_per_sentence"].get<double>();
    t.rows.push_back(std::move(r));
  }
  t.validate();
  return t;
}

std::optional<double> tokens_per_sentence(const fs::path& stats_json) {
  if (!fs::exists(stats_json)) return std::nullopt;
  auto j = io::read_json(stats_json);
  for (const auto& s : j.at("splits")) {
    if (s.at("split").get<std::string>() != "train") continue;
    double tokens = s.at("src").at("token_count").get<double>() + s.at("trg").at("token_count").get<double>();
    double sentences =
        s.at("src").at("sentence_count").get<double>() + s.at("trg").at("sentence_count").get<double>();
    if (sentences == 0) return std::nullopt;
    return tokens / sentences;
  }
  return std::nullopt;
}

CollectResult collect(const fs::path& root) {
  CollectResult out;
  if (!fs::exists(root)) return out;
  std::vector<fs::path> run_files;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied);
       it != fs::recursive_directory_iterator(); ++it) {
    const auto& p = it->path();
    if (it->is_directory() && (p.filename() == "data" || p.filename() == "checkpoints")) {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file() && p.filename() == "run.json") run_files.push_back(p);
  }
  std::sort(run_files.begin(), run_files.end());

  for (const auto& rf : run_files) {
    RunRecord run;
    try {
      run = run_from_json(io::read_json(rf));
    } catch (const std::exception& e) {
      out.warnings.push_back(rf.string() + ": " + e.what());
      continue;
    }
    fs::path run_dir = rf.parent_path();
    std::optional<double> tps;
    try {
      tps = tokens_per_sentence(run.variant.stats_dir() / "stats.json");
    } catch (const std::exception& e) {
      out.warnings.push_back((run.variant.stats_dir() / "stats.json").string() + ": " + e.what());
    }

    fs::path eval_root = run_dir / "eval";
    if (!fs::exists(eval_root)) continue;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(eval_root)) {
      if (!e.is_regular_file() || e.path().extension() != ".json") continue;
      if (e.path().parent_path().filename().string().rfind("beam", 0) != 0) continue;
      files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      EvaluationResult ev;
      try {
        ev = evaluation_from_json(io::read_json(f));
      } catch (const std::exception& e) {
        out.warnings.push_back(f.string() + ": " + e.what());
        continue;
      }
      ReportRow r;
      r.run_id = ev.run_id;
      r.train_dataset = ev.train_dataset;
      r.eval_dataset = ev.eval_dataset.id();
      r.translator = ev.translator;
      r.subword_model = ev.subword_model;
      r.vocab_size = ev.vocab_size;
      r.train_limit = ev.train_limit;
      r.metric = ev.metric;
      r.beam = ev.decode.beam_width;
      r.score = ev.score;
      r.tokens_per_sentence = tps;
      out.table.rows.push_back(std::move(r));
    }
  }
  for (const auto& w : out.warnings) spdlog::warn("skipped {}", w);
  out.table.sort();
  out.table.validate();
  return out;
}

ReportTable own_evaluations(const ReportTable& table) {
  ReportTable out;
  for (const auto& r : table.rows)
    if (r.eval_dataset == r.train_dataset) out.rows.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------
// System comparison

Comparison system_comparison(const ReportTable& table, const std::string& system_a, const std::string& system_b,
                             const std::string& metric) {
  using Key = std::tuple<std::string, std::string, std::string, std::optional<std::uint32_t>>;
  auto key_text = [](const Key& k) {
    const auto& [t, e, s, v] = k;
    return t + " / " + e + " / " + s + " / " + (v ? std::to_string(*v) : "-");
  };
  auto gather = [&](const std::string& system) {
    std::map<Key, double> out;
    for (const auto& r : table.rows) {
      if (r.translator != system || r.metric != metric) continue;
      Key k{r.train_dataset, r.eval_dataset, r.subword_model, r.vocab_size};
      if (!out.emplace(k, r.score).second)
        throw DataError("system " + system + " has several " + metric + " scores for " + key_text(k));
    }
    return out;
  };
  auto a = gather(system_a);
  auto b = gather(system_b);
  if (a.empty() && b.empty()) throw DataError("no " + metric + " rows for " + system_a + " or " + system_b);

  std::vector<std::string> unmatched;
  for (const auto& [k, v] : a)
    if (!b.count(k)) unmatched.push_back(key_text(k) + " (only " + system_a + ")");
  for (const auto& [k, v] : b)
    if (!a.count(k)) unmatched.push_back(key_text(k) + " (only " + system_b + ")");
  if (!unmatched.empty()) {
    std::string msg = "systems do not share the same keys:";
    for (const auto& u : unmatched) msg += "\n  " + u;
    throw DataError(msg);
  }

  Comparison c{system_a, system_b, metric, {}, 0.0, 0.0};
  double sum = 0.0, abs_sum = 0.0;
  for (const auto& [k, sa] : a) {
    double sb = b.at(k);
    const auto& [t, e, s, v] = k;
    c.rows.push_back({t, e, s, v, sa, sb, sb - sa});
    sum += sb - sa;
    abs_sum += std::abs(sb - sa);
  }
  auto n = static_cast<double>(c.rows.size());
  c.signed_mean = sum / n;
  c.absolute_mean = abs_sum / n;
  return c;
}

void write_comparison(const Comparison& c, const fs::path& out_dir) {
  std::vector<std::string> header = {"train_dataset", "eval_dataset", "subword_model", "vocab_size",
                                     "score_" + c.system_a, "score_" + c.system_b, "delta"};
  std::vector<std::vector<std::string>> rows;
  svg::BarChart chart{c.metric + ": " + c.system_b + " vs " + c.system_a, "configuration", c.metric, {}, {}};
  svg::BarSeries sa{c.system_a, {}}, sb{c.system_b, {}};
  for (const auto& r : c.rows) {
    std::string vs = r.vocab_size ? std::to_string(*r.vocab_size) : "";
    std::string a = io::format_2dp(r.score_a), b = io::format_2dp(r.score_b);
    rows.push_back({r.train_dataset, r.eval_dataset, r.subword_model, vs, a, b, io::format_2dp(r.delta)});
    chart.categories.push_back(r.train_dataset + " / " + r.eval_dataset + " / " + r.subword_model + " / " +
                               (vs.empty() ? "-" : vs));
    sa.values.push_back(svg::Value{r.score_a, a});
    sb.values.push_back(svg::Value{r.score_b, b});
  }
  chart.series = {std::move(sa), std::move(sb)};
  nlohmann::json summary = {{"signed_mean", io::format_2dp(c.signed_mean)},
                            {"absolute_mean", io::format_2dp(c.absolute_mean)},
                            {"signed_mean_exact", c.signed_mean},
                            {"absolute_mean_exact", c.absolute_mean},
                            {"pairs", c.rows.size()}};
  write_report(out_dir, "system_comparison",
               {{"system_a", c.system_a}, {"system_b", c.system_b}, {"metric", c.metric}}, header, rows,
               {{"chart_comparison.svg", svg::render(chart)}}, summary);
}

// ---------------------------------------------------------------------------
// Metric report

void metric_report(const ReportTable& table, const std::vector<std::string>& group_by,
                   const std::vector<std::string>& metrics, const fs::path& out_dir) {
  check_columns(group_by, "group_by");
  if (metrics.empty()) throw ConfigError("metric report needs at least one metric");
  std::vector<ReportRow> rows;
  for (const auto& r : table.rows)
    if (std::find(metrics.begin(), metrics.end(), r.metric) != metrics.end()) rows.push_back(r);
  if (rows.empty()) throw DataError("metric report: no rows for the requested metrics");
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const ReportRow& a, const ReportRow& b) { return less_by(a, b, group_by); });

  std::vector<std::string> header = group_by;
  for (auto c : {"run_id", "eval_dataset", "beam", "metric", "score"}) header.emplace_back(c);
  std::vector<std::vector<std::string>> csv_rows;
  for (const auto& r : rows) {
    std::vector<std::string> f;
    for (const auto& g : group_by) f.push_back(report_cell(r, g));
    f.push_back(r.run_id);
    f.push_back(r.eval_dataset);
    f.push_back(std::to_string(r.beam));
    f.push_back(r.metric);
    f.push_back(io::format_2dp(r.score));
    csv_rows.push_back(std::move(f));
  }

  std::vector<std::pair<std::string, std::string>> charts;
  for (const auto& m : metrics) {
    svg::BarChart chart;
    chart.y_label = m;
    std::string groups;
    for (std::size_t i = 0; i < group_by.size(); ++i) groups += (i ? ", " : "") + group_by[i];
    chart.title = m + " by " + (groups.empty() ? "run" : groups);
    chart.x_label = groups.empty() ? "run" : groups;
    std::vector<std::string> series_names;
    std::map<std::pair<std::string, std::string>, svg::Value> bars;
    for (const auto& r : rows) {
      if (r.metric != m) continue;
      std::string cat = group_by.empty() ? "all" : join_values(r, group_by, " / ", false);
      std::string ser = r.run_id + " @ " + r.eval_dataset + " (beam " + std::to_string(r.beam) + ")";
      if (std::find(chart.categories.begin(), chart.categories.end(), cat) == chart.categories.end())
        chart.categories.push_back(cat);
      if (std::find(series_names.begin(), series_names.end(), ser) == series_names.end()) series_names.push_back(ser);
      bars[{cat, ser}] = svg::Value{r.score, io::format_2dp(r.score)};
    }
    for (const auto& s : series_names) {
      svg::BarSeries bs{s, {}};
      for (const auto& cat : chart.categories) {
        auto it = bars.find({cat, s});
        bs.values.push_back(it == bars.end() ? std::nullopt : std::optional<svg::Value>(it->second));
      }
      chart.series.push_back(std::move(bs));
    }
    charts.emplace_back("chart_" + safe_name(m) + ".svg", svg::render(chart));
  }
  write_report(out_dir, "metric_report", {{"group_by", group_by}, {"metrics", metrics}}, header, csv_rows, charts);
}

// ---------------------------------------------------------------------------
// Cross-dataset matrix

void cross_dataset_matrix(const ReportTable& table, const std::string& metric, const fs::path& out_dir) {
  using RowKey = std::pair<std::string, std::uint32_t>;  // run_id, beam
  std::map<RowKey, std::string> train_of;
  std::set<std::string> cols;
  std::map<std::pair<RowKey, std::string>, double> cells;
  for (const auto& r : table.rows) {
    if (r.metric != metric) continue;
    RowKey k{r.run_id, r.beam};
    train_of[k] = r.train_dataset;
    cols.insert(r.eval_dataset);
    cells[{k, r.eval_dataset}] = r.score;
  }
  if (cols.size() < 2) spdlog::warn("cross-dataset matrix for {} has fewer than two eval datasets", metric);

  std::vector<std::string> header = {"run_id", "train_dataset", "beam"};
  header.insert(header.end(), cols.begin(), cols.end());
  std::vector<std::vector<std::string>> rows;
  svg::Heatmap hm{metric + ": train run x eval dataset", {}, {cols.begin(), cols.end()}, {}};
  for (const auto& [k, train] : train_of) {
    std::vector<std::string> f = {k.first, train, std::to_string(k.second)};
    std::vector<std::optional<svg::Value>> hm_row;
    for (const auto& c : cols) {
      auto it = cells.find({k, c});
      if (it == cells.end()) {
        f.emplace_back();
        hm_row.emplace_back(std::nullopt);
      } else {
        std::string text = io::format_2dp(it->second);
        f.push_back(text);
        hm_row.emplace_back(svg::Value{it->second, text});
      }
    }
    rows.push_back(std::move(f));
    hm.row_labels.push_back(k.first + " (beam " + std::to_string(k.second) + ")");
    hm.cells.push_back(std::move(hm_row));
  }
  write_report(out_dir, "cross_dataset_matrix", {{"metric", metric}}, header, rows,
               {{"chart_matrix.svg", svg::render(hm)}});
}

// ---------------------------------------------------------------------------
// Multivariable report

void multivariable_report(const ReportTable& table, const std::string& x, const std::vector<YVariable>& y,
                          const fs::path& out_dir, const std::vector<std::string>& series_by) {
  if (!is_report_column(x) || !is_numeric_column(x))
    throw ConfigError("x variable '" + x + "' must be a numeric column (vocab_size, train_limit, beam, score, "
                      "tokens_per_sentence)");
  if (y.empty()) throw ConfigError("multivariable report needs at least one y variable");
  check_columns(series_by, "series_by");
  if (table.rows.empty()) throw DataError("multivariable report: the result table is empty");
  std::set<std::string> metric_names;
  for (const auto& r : table.rows) metric_names.insert(r.metric);
  for (const auto& v : y)
    if (!metric_names.count(v.variable) && !(is_report_column(v.variable) && is_numeric_column(v.variable)))
      throw ConfigError("y variable '" + v.variable + "' is neither a metric in the table nor a numeric column");

  struct Series {
    std::string name;
    std::string variable;
    AxisSide axis;
    std::map<double, double> points;
  };
  std::vector<Series> series;
  std::map<std::pair<std::string, std::string>, std::size_t> index;

  for (const auto& v : y) {
    bool is_metric = metric_names.count(v.variable) > 0;
    for (const auto& r : table.rows) {
      if (is_metric && r.metric != v.variable) continue;
      auto xv = numeric_cell(r, x);
      if (!xv) continue;
      std::optional<double> yv = is_metric ? std::optional<double>(r.score) : numeric_cell(r, v.variable);
      if (!yv) continue;
      std::string group = join_values(r, series_by, ", ", true);
      auto [it, inserted] = index.emplace(std::make_pair(group, v.variable), series.size());
      if (inserted) series.push_back({group + " : " + v.variable, v.variable, v.axis, {}});
      auto& pts = series[it->second].points;
      auto [p, fresh] = pts.emplace(*xv, *yv);
      if (!fresh && p->second != *yv)
        throw DataError("multivariable report: series '" + series[it->second].name + "' has two " + v.variable +
                        " values at " + x + "=" + report_text(x, *xv) + "; add a series_by column or filter");
    }
  }
  if (series.empty()) throw DataError("multivariable report: no data points");

  std::vector<std::string> header = {"series", "variable", "axis", x, "y"};
  std::vector<std::vector<std::string>> rows;
  svg::LineChart chart;
  chart.x_label = x;
  std::vector<std::string> left, right;
  for (const auto& v : y) {
    auto& side = v.axis == AxisSide::left ? left : right;
    if (std::find(side.begin(), side.end(), v.variable) == side.end()) side.push_back(v.variable);
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out;
  };
  chart.left_label = join(left);
  chart.right_label = join(right);
  chart.title = join(left) + (right.empty() ? "" : " / " + join(right)) + " vs " + x;
  for (const auto& s : series) {
    svg::LineSeries ls{s.name, s.axis == AxisSide::left ? svg::Axis::left : svg::Axis::right, {}};
    for (const auto& [xv, yv] : s.points) {
      std::string xt = report_text(x, xv);
      std::string yt = report_text(s.variable, yv);
      rows.push_back({s.name, s.variable, s.axis == AxisSide::left ? "left" : "right", xt, yt});
      ls.points.push_back({svg::Value{xv, xt}, svg::Value{yv, yt}});
    }
    chart.series.push_back(std::move(ls));
  }
  nlohmann::json yj = nlohmann::json::array();
  for (const auto& v : y) yj.push_back({{"variable", v.variable}, {"axis", v.axis == AxisSide::left ? "left" : "right"}});
  write_report(out_dir, "multivariable_report", {{"x", x}, {"y", yj}, {"series_by", series_by}}, header, rows,
               {{"chart_multivariable.svg", svg::render(chart)}});
}

}  // namespace seqpipe

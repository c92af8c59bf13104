#include "seqpipe/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace seqpipe::svg {

namespace {

constexpr double kWidth = 860;
constexpr double kHeight = 480;
constexpr double kLeft = 80;
constexpr double kRight = 80;
constexpr double kTop = 50;
constexpr double kBottom = 90;

const char* const kPalette[] = {"#4C72B0", "#DD8452", "#55A868", "#C44E52", "#8172B3",
                                "#937860", "#DA8BC3", "#8C8C8C", "#CCB974", "#64B5CD"};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  double map(double v, double px_lo, double px_hi) const {
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

Range make_range(double lo, double hi, bool include_zero) {
  if (include_zero) {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
  }
  if (!(hi > lo)) {
    double pad = std::abs(hi) > 0 ? std::abs(hi) * 0.1 : 1.0;
    lo -= pad;
    hi += pad;
  }
  return {lo, hi};
}

std::string header(const std::string& title) {
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">" + xml_escape(title) + "</text>\n";
  return out;
}

std::string text_at(double x, double y, const std::string& s, const char* anchor,
                    int size = 11, const std::string& extra = {}) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor +
         "\" font-size=\"" + std::to_string(size) + "\" font-family=\"sans-serif\"" + extra + ">" +
         xml_escape(s) + "</text>\n";
}

std::string axis_ticks(const Range& r, double x, bool right_side) {
  std::string out;
  for (int i = 0; i <= 4; ++i) {
    double v = r.lo + (r.hi - r.lo) * i / 4.0;
    double y = r.map(v, kHeight - kBottom, kTop);
    double tx = right_side ? x + 6 : x - 6;
    out += "<line x1=\"" + num(x - 3) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 3) + "\" y2=\"" +
           num(y) + "\" stroke=\"black\"/>\n";
    out += text_at(tx, y + 4, num(v), right_side ? "start" : "end", 10);
  }
  return out;
}

std::string legend(const std::vector<std::string>& names) {
  std::string out = "<g class=\"legend\">\n";
  double x = kLeft;
  double y = kHeight - 22;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
           color(i) + "\"/>\n";
    out += text_at(x + 14, y, names[i], "start", 10);
    x += 24 + 6.5 * static_cast<double>(names[i].size());
    if (x > kWidth - kRight) {
      x = kLeft;
      y += 14;
    }
  }
  out += "</g>\n";
  return out;
}

}  // namespace

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // XML 1.0 forbids most control characters, even escaped.
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') {
          out += "?";
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string render(const BarChart& chart) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : chart.series)
    for (const auto& v : s.values)
      if (v) {
        lo = std::min(lo, v->number);
        hi = std::max(hi, v->number);
      }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  Range r = make_range(lo, hi, true);

  std::string out = header(chart.title);
  out += "<g class=\"axes\">\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  double zero_y = r.map(0.0, kHeight - kBottom, kTop);
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(zero_y) + "\" x2=\"" + num(kWidth - kRight) +
         "\" y2=\"" + num(zero_y) + "\" stroke=\"black\"/>\n";
  out += axis_ticks(r, kLeft, false);
  out += text_at(20, (kTop + kHeight - kBottom) / 2, chart.y_label, "middle", 12,
                 " transform=\"rotate(-90 20 " + num((kTop + kHeight - kBottom) / 2) + ")\"");
  out += text_at((kLeft + kWidth - kRight) / 2, kHeight - kBottom + 36, chart.x_label, "middle", 12);
  out += "</g>\n";

  std::size_t ncat = std::max<std::size_t>(chart.categories.size(), 1);
  std::size_t nser = std::max<std::size_t>(chart.series.size(), 1);
  double group_w = (kWidth - kLeft - kRight) / static_cast<double>(ncat);
  double bar_w = group_w * 0.8 / static_cast<double>(nser);

  out += "<g class=\"bars\">\n";
  for (std::size_t c = 0; c < chart.categories.size(); ++c) {
    double gx = kLeft + group_w * static_cast<double>(c);
    out += text_at(gx + group_w / 2, kHeight - kBottom + 16, chart.categories[c], "middle", 10);
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
      const auto& series = chart.series[s];
      if (c >= series.values.size() || !series.values[c]) continue;
      const Value& v = *series.values[c];
      double y = r.map(v.number, kHeight - kBottom, kTop);
      double top = std::min(y, zero_y);
      double h = std::abs(zero_y - y);
      double x = gx + group_w * 0.1 + bar_w * static_cast<double>(s);
      out += "<rect class=\"bar\" x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" +
             num(bar_w) + "\" height=\"" + num(h) + "\" fill=\"" + color(s) +
             "\" data-category=\"" + xml_escape(chart.categories[c]) + "\" data-series=\"" +
             xml_escape(series.name) + "\" data-value=\"" + xml_escape(v.text) + "\"><title>" +
             xml_escape(series.name + " / " + chart.categories[c] + ": " + v.text) +
             "</title></rect>\n";
    }
  }
  out += "</g>\n";

  std::vector<std::string> names;
  for (const auto& s : chart.series) names.push_back(s.name);
  out += legend(names);
  out += "</svg>\n";
  return out;
}

std::string render(const LineChart& chart) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double llo = xlo, lhi = -xlo, rlo = xlo, rhi = -xlo;
  bool has_right = false;
  for (const auto& s : chart.series) {
    if (s.axis == Axis::right) has_right = true;
    for (const auto& p : s.points) {
      xlo = std::min(xlo, p.x.number);
      xhi = std::max(xhi, p.x.number);
      if (s.axis == Axis::left) {
        llo = std::min(llo, p.y.number);
        lhi = std::max(lhi, p.y.number);
      } else {
        rlo = std::min(rlo, p.y.number);
        rhi = std::max(rhi, p.y.number);
      }
    }
  }
  if (!std::isfinite(xlo)) xlo = xhi = 0.0;
  if (!std::isfinite(llo)) llo = lhi = 0.0;
  if (!std::isfinite(rlo)) rlo = rhi = 0.0;
  Range xr = make_range(xlo, xhi, false);
  Range lr = make_range(llo, lhi, false);
  Range rr = make_range(rlo, rhi, false);

  double x0 = kLeft, x1 = kWidth - kRight;
  std::string out = header(chart.title);
  out += "<g class=\"axes\">\n";
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(x0) + "\" y2=\"" +
         num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(kHeight - kBottom) + "\" x2=\"" + num(x1) +
         "\" y2=\"" + num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  out += axis_ticks(lr, x0, false);
  out += text_at(20, (kTop + kHeight - kBottom) / 2, chart.left_label, "middle", 12,
                 " transform=\"rotate(-90 20 " + num((kTop + kHeight - kBottom) / 2) + ")\"");
  if (has_right) {
    out += "<line class=\"secondary-axis\" x1=\"" + num(x1) + "\" y1=\"" + num(kTop) + "\" x2=\"" +
           num(x1) + "\" y2=\"" + num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
    out += axis_ticks(rr, x1, true);
    out += text_at(kWidth - 16, (kTop + kHeight - kBottom) / 2, chart.right_label, "middle", 12,
                   " transform=\"rotate(90 " + num(kWidth - 16) + " " +
                       num((kTop + kHeight - kBottom) / 2) + ")\"");
  }
  for (int i = 0; i <= 4; ++i) {
    double v = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    out += text_at(xr.map(v, x0, x1), kHeight - kBottom + 16, num(v), "middle", 10);
  }
  out += text_at((x0 + x1) / 2, kHeight - kBottom + 36, chart.x_label, "middle", 12);
  out += "</g>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const Range& yr = series.axis == Axis::left ? lr : rr;
    out += "<g class=\"series\" data-series=\"" + xml_escape(series.name) + "\" data-axis=\"" +
           (series.axis == Axis::left ? "left" : "right") + "\">\n";
    if (series.points.size() >= 2) {
      std::string d;
      for (std::size_t i = 0; i < series.points.size(); ++i) {
        const auto& p = series.points[i];
        d += (i == 0 ? "M" : " L") + num(xr.map(p.x.number, x0, x1)) + " " +
             num(yr.map(p.y.number, kHeight - kBottom, kTop));
      }
      out += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color(s) + "\" stroke-width=\"2\"" +
             (series.axis == Axis::right ? " stroke-dasharray=\"6 3\"" : "") + "/>\n";
    }
    for (const auto& p : series.points) {
      out += "<circle class=\"point\" cx=\"" + num(xr.map(p.x.number, x0, x1)) + "\" cy=\"" +
             num(yr.map(p.y.number, kHeight - kBottom, kTop)) + "\" r=\"4\" fill=\"" + color(s) +
             "\" data-x=\"" + xml_escape(p.x.text) + "\" data-value=\"" + xml_escape(p.y.text) +
             "\"/>\n";
    }
    out += "</g>\n";
  }

  std::vector<std::string> names;
  for (const auto& s : chart.series) names.push_back(s.name);
  out += legend(names);
  out += "</svg>\n";
  return out;
}

std::string render(const Heatmap& chart) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : chart.cells)
    for (const auto& c : row)
      if (c) {
        lo = std::min(lo, c->number);
        hi = std::max(hi, c->number);
      }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  Range r = make_range(lo, hi, false);

  double label_w = 200;
  double x0 = label_w, y0 = kTop + 40;
  std::size_t ncol = std::max<std::size_t>(chart.col_labels.size(), 1);
  std::size_t nrow = std::max<std::size_t>(chart.row_labels.size(), 1);
  double cw = (kWidth - x0 - 20) / static_cast<double>(ncol);
  double ch = std::min(60.0, (kHeight - y0 - 20) / static_cast<double>(nrow));

  std::string out = header(chart.title);
  for (std::size_t c = 0; c < chart.col_labels.size(); ++c)
    out += text_at(x0 + cw * (static_cast<double>(c) + 0.5), y0 - 8, chart.col_labels[c], "middle", 10);
  for (std::size_t rr = 0; rr < chart.row_labels.size(); ++rr) {
    double y = y0 + ch * static_cast<double>(rr);
    out += text_at(x0 - 8, y + ch / 2 + 4, chart.row_labels[rr], "end", 10);
    for (std::size_t c = 0; c < chart.col_labels.size(); ++c) {
      double x = x0 + cw * static_cast<double>(c);
      const std::optional<Value>* cell =
          rr < chart.cells.size() && c < chart.cells[rr].size() ? &chart.cells[rr][c] : nullptr;
      std::string attrs = " data-row=\"" + xml_escape(chart.row_labels[rr]) + "\" data-col=\"" +
                          xml_escape(chart.col_labels[c]) + "\"";
      if (cell && *cell) {
        double t = (r.hi > r.lo) ? ((*cell)->number - r.lo) / (r.hi - r.lo) : 0.5;
        int shade = static_cast<int>(std::lround(235 - 170 * t));
        char fill[16];
        std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
        out += "<rect class=\"cell\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cw) +
               "\" height=\"" + num(ch) + "\" fill=\"" + fill + "\" stroke=\"white\"" + attrs +
               " data-value=\"" + xml_escape((*cell)->text) + "\"/>\n";
        out += text_at(x + cw / 2, y + ch / 2 + 4, (*cell)->text, "middle", 11);
      } else {
        out += "<rect class=\"cell missing\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
               num(cw) + "\" height=\"" + num(ch) + "\" fill=\"#f4f4f4\" stroke=\"white\"" + attrs +
               " data-value=\"\"/>\n";
      }
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace seqpipe::svg

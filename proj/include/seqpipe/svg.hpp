#pragma once

#include <optional>
#include <string>
#include <vector>

// Self-contained SVG charts. Every plotted value is also written verbatim as a
// `data-value` attribute so the numbers can be checked without rasterizing.
namespace seqpipe::svg {

struct Value {
  double number = 0.0;
  std::string text;  // exact string mirrored in the companion CSV
};

struct BarSeries {
  std::string name;
  std::vector<std::optional<Value>> values;  // one per category
};

struct BarChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<BarSeries> series;
};

struct Point {
  Value x;
  Value y;
};

enum class Axis { left, right };

struct LineSeries {
  std::string name;
  Axis axis = Axis::left;
  std::vector<Point> points;  // drawn in the given order
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string left_label;
  std::string right_label;
  std::vector<LineSeries> series;
};

struct Heatmap {
  std::string title;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<std::optional<Value>>> cells;  // [row][col]
};

std::string render(const BarChart& chart);
std::string render(const LineChart& chart);
std::string render(const Heatmap& chart);

std::string xml_escape(std::string_view text);

}  // namespace seqpipe::svg

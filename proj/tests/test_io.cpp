#include <gtest/gtest.h>

#include <random>

#include "seqpipe/io.hpp"
#include "seqpipe/process.hpp"
#include "seqpipe/svg.hpp"
#include "seqpipe/utf8.hpp"
#include "test_util.hpp"

using namespace seqpipe;

TEST(Io, LinesRoundTripWithoutPhantomTrailingLine) {
  testutil::TempDir tmp;
  io::write_lines(tmp / "a/b.txt", {"one", "", "three"});
  EXPECT_EQ(testutil::read_text(tmp / "a/b.txt"), "one\n\nthree\n");
  EXPECT_EQ(io::read_lines(tmp / "a/b.txt"), (std::vector<std::string>{"one", "", "three"}));
}

TEST(Io, CarriageReturnIsData) {
  testutil::TempDir tmp;
  testutil::write_text(tmp / "crlf.txt", "a\r\nb");
  EXPECT_EQ(io::read_lines(tmp / "crlf.txt"), (std::vector<std::string>{"a\r", "b"}));
}

TEST(Io, CsvRoundTripsAwkwardFields) {
  std::vector<std::string> row = {"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
  auto parsed = io::parse_csv(io::csv_row(row));
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0], row);
}

TEST(Io, NumberFormatting) {
  EXPECT_EQ(io::format_2dp(35.255), "35.26");
  EXPECT_EQ(io::format_2dp(-0.24875), "-0.25");
  EXPECT_EQ(io::format_2dp(100), "100.00");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    double v = d(rng);
    EXPECT_EQ(std::stod(io::format_exact(v)), v);
  }
}

TEST(Utf8, MalformedBytesStayAsUnits) {
  std::string s = "a\xC3\xA9\xFF\xE2\x96";
  auto units = utf8::split_chars(s);
  // a, é, then \xFF, \xE2 and \x96 one byte each.
  ASSERT_EQ(units.size(), 5u);
  std::string joined;
  for (auto u : units) joined += u;
  EXPECT_EQ(joined, s);
  EXPECT_EQ(utf8::decode(units[1]), U'é');
  EXPECT_EQ(utf8::char_count("h\xC3\xA9llo"), 5u);
}

TEST(Utf8, SplitWhitespaceDropsEmpties) {
  EXPECT_EQ(utf8::split_whitespace("  a\tb \xE3\x80\x80 c  "), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Process, ExitCodeAndCapturedOutput) {
  testutil::TempDir tmp;
  process::Options opts;
  opts.stdout_path = tmp / "out.log";
  opts.env["SEQPIPE_PROBE"] = "42";
  auto r = process::run({"sh", "-c", "echo value=$SEQPIPE_PROBE; exit 3"}, opts);
  EXPECT_TRUE(r.spawned);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(process::tail(tmp / "out.log"), "value=42");
}

TEST(Process, MissingProgramIsReportedNotThrown) {
  auto r = process::run({"/nonexistent/seqpipe-no-such-tool"});
  EXPECT_FALSE(r.spawned && r.exit_code == 0);
}

TEST(Svg, BarChartIsWellFormed) {
  svg::BarChart chart;
  chart.title = "a < b & c";
  chart.categories = {"x", "y"};
  chart.series = {{"s", {svg::Value{1.0, "1.00"}, std::nullopt}}};
  std::string text = svg::render(chart);
  EXPECT_EQ(text.rfind("<?xml", 0), 0u);
  EXPECT_NE(text.find("<svg xmlns="), std::string::npos);
  EXPECT_NE(text.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_NE(text.find("data-value=\"1.00\""), std::string::npos);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
}

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace seqpipe::io {

namespace fs = std::filesystem;

/// Reads a UTF-8 text file as LF-separated lines. A trailing newline does not
/// produce an extra empty line; CR before LF is kept as data.
std::vector<std::string> read_lines(const fs::path& path);

/// Writes one line per element, each terminated by LF. Parent directories are
/// created. The write goes through a temp file and a rename.
void write_lines(const fs::path& path, const std::vector<std::string>& lines);

std::string read_file(const fs::path& path);
void write_file_atomic(const fs::path& path, std::string_view contents);

nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& value);

// RFC 4180-style CSV.
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Fixed two-decimal rendering used by every report and chart.
std::string format_2dp(double value);

/// Shortest text that parses back to exactly `value`.
std::string format_exact(double value);

std::string utc_timestamp();

}  // namespace seqpipe::io

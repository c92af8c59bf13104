#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace seqpipe::process {

namespace fs = std::filesystem;

struct Options {
  // When unset the stream is discarded.
  std::optional<fs::path> stdout_path;
  std::optional<fs::path> stderr_path;
  bool append = false;
  std::map<std::string, std::string> env;  // added to the inherited environment
  std::optional<fs::path> cwd;
};

struct Result {
  int exit_code = -1;  // 128 + signal number when killed by a signal
  bool spawned = false;
  std::string spawn_error;
};

/// Runs argv[0] (PATH lookup) with the remaining arguments verbatim; no shell is
/// involved. Blocks until the child exits.
Result run(const std::vector<std::string>& argv, const Options& options = {});

/// Last `max_lines` lines of a text file; empty if the file is missing.
std::string tail(const fs::path& path, std::size_t max_lines = 20);

}  // namespace seqpipe::process

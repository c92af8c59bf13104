#pragma once

#include <iosfwd>

namespace seqpipe::cli {

/// Environment variable that replaces the config's base_path.
inline constexpr const char* kBasePathEnv = "SEQPIPE_BASE_PATH";

/// Parses arguments, runs one subcommand and returns the exit code
/// (0 all ok, 1 config error, 2 some failed).
int run(int argc, char** argv);
int run(int argc, char** argv, std::ostream& out);

}  // namespace seqpipe::cli

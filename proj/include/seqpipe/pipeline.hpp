#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "seqpipe/config.hpp"
#include "seqpipe/corpus_stats.hpp"

// The five CLI stages as library calls. Each prints human-readable progress
// to `out` and returns a process exit code.
namespace seqpipe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitSomeFailed = 2;

struct CommandOptions {
  std::size_t jobs = 1;
  bool force = false;
  bool interactive = false;
  ConfirmFn confirm;  // interactive layout prompt; console y/N when empty
  std::optional<EvalScope> scope;
  std::vector<std::string> reports;  // report names to generate; empty means all
};

/// Creates missing splits for a dataset: derived from raw files, from the
/// "original" sibling (size-limited prefix) or from a filtered source dataset.
void prepare_splits(const ExperimentConfig& cfg, const DatasetRef& ref);

/// Writes stats for one materialized variant.
DatasetStats emit_variant_stats(const VariantSpec& v);

/// Variants of every indexed dataset, in enumeration order.
std::vector<VariantSpec> configured_variants(const ExperimentConfig& cfg);

int cmd_build(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_stats(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_fit(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_evaluate(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_report(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out);

}  // namespace seqpipe

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace pma::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kRuntimeError = 3,
};

struct RunOptions {
  std::string config_path;  // empty: all defaults
  std::optional<std::uint64_t> seed;
  std::string out_path;  // per-round CSV; falls back to output.csv of the config
  bool dump_rounds = false;
};

struct SweepOptions {
  std::string config_path;
  std::string out_path;  // sweep CSV; falls back to output.csv, then stdout
  int jobs = 0;          // 0: one per hardware thread
};

/// One run; prints a summary table to `out`, diagnostics to `err`.
/// With dump_rounds the CSV carries every clean and submitted report vector
/// and the fusion model is written next to it as <out>.fusion.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Factorial sweep; writes the CSV and a markdown mean +- std table
/// (output.summary, else <out>.md, else stdout).
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);

/// Parses argv (subcommands `run` and `sweep`) and dispatches.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pma::cli

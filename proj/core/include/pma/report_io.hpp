#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pma/simulator.hpp"

namespace pma {

/// Header of the sweep CSV, without the trailing newline.
inline constexpr const char* kSweepCsvHeader =
    "m,tau,seed,hit_ratio,attacks_launched,attacks_flipped,attack_rate,surrogate_agreement,fusion_clean_accuracy";

/// Formats a value with 6 significant digits ("%.6g").
std::string format_g6(double v);

/// One row per (m, tau, seed). Undefined values are written as empty fields.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

/// Parses a file produced by write_sweep_csv. Throws InputError on a
/// malformed header or row. surrogate_flips is not stored and reads as 0.
std::vector<SweepRow> read_sweep_csv(std::istream& in);

/// Markdown table of mean +- sample std of the hit ratio per (m, tau).
void write_sweep_summary(std::ostream& out, std::span<const SweepCell> cells);

/// Human-readable summary of one run.
void write_run_summary(std::ostream& out, const RunReport& report);

/// Per-round CSV of the attack phase. With include_reports, the clean and
/// submitted report vectors follow as clean_<i> and attacked_<i> columns,
/// printed with 17 significant digits so they can be re-fused exactly.
void write_round_csv(std::ostream& out, const RunReport& report, bool include_reports);

struct DumpedRound {
  AttackRecord record;
  Eigen::VectorXd clean;     // empty when the dump has no report columns
  Eigen::VectorXd attacked;
};

/// Parses a file produced by write_round_csv.
std::vector<DumpedRound> read_round_csv(std::istream& in);

}  // namespace pma

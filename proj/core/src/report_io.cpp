#include "pma/report_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "pma/errors.hpp"

namespace pma {
namespace {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string optional_g6(const std::optional<double>& v) { return v ? format_g6(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double to_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("line " + std::to_string(line) + ": not a number: '" + s + "'");
}

long long to_integer(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("line " + std::to_string(line) + ": not an integer: '" + s + "'");
}

std::uint64_t to_unsigned(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == s.size() && !s.empty() && s.front() != '-') return v;
  } catch (const std::exception&) {
  }
  throw InputError("line " + std::to_string(line) + ": not a seed: '" + s + "'");
}

std::optional<double> to_optional(const std::string& s, int line) {
  if (s.empty()) return std::nullopt;
  return to_double(s, line);
}

const char* kRoundColumns = "round_id,true_label,clean_decision,attacked_decision,launched,inferred_label,confidence,flipped";
constexpr std::size_t kRoundFieldCount = 8;

}  // namespace

std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepCsvHeader << '\n';
  for (const SweepRow& r : rows) {
    const RunMetrics& mt = r.metrics;
    out << r.m << ',' << format_g6(r.tau) << ',' << r.seed << ',' << optional_g6(mt.hit_ratio) << ','
        << mt.attacks_launched << ',' << mt.attacks_flipped << ',' << format_g6(mt.attack_rate) << ','
        << optional_g6(mt.surrogate_agreement) << ',' << format_g6(mt.fusion_clean_accuracy) << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader) throw InputError("missing or unexpected sweep CSV header");
  std::vector<SweepRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw InputError("line " + std::to_string(lineno) + ": expected 9 fields");
    SweepRow r;
    r.m = static_cast<int>(to_integer(f[0], lineno));
    r.tau = to_double(f[1], lineno);
    r.seed = to_unsigned(f[2], lineno);
    r.metrics.hit_ratio = to_optional(f[3], lineno);
    r.metrics.attacks_launched = static_cast<int>(to_integer(f[4], lineno));
    r.metrics.attacks_flipped = static_cast<int>(to_integer(f[5], lineno));
    r.metrics.attack_rate = to_double(f[6], lineno);
    r.metrics.surrogate_agreement = to_optional(f[7], lineno);
    r.metrics.fusion_clean_accuracy = to_double(f[8], lineno);
    rows.push_back(r);
  }
  return rows;
}

void write_sweep_summary(std::ostream& out, std::span<const SweepCell> cells) {
  out << "| m | tau | hit ratio (mean +- std) | defined runs | mean attack rate |\n";
  out << "|---|-----|-------------------------|--------------|------------------|\n";
  for (const SweepCell& c : cells) {
    out << "| " << c.m << " | " << format_g6(c.tau) << " | ";
    if (c.mean_hit_ratio) {
      out << format_g6(*c.mean_hit_ratio) << " +- " << format_g6(c.std_hit_ratio);
    } else {
      out << "n/a";
    }
    out << " | " << c.defined_runs << "/" << c.runs << " | " << format_g6(c.mean_attack_rate) << " |\n";
  }
}

void write_run_summary(std::ostream& out, const RunReport& report) {
  const RunConfig& cfg = report.config;
  const RunMetrics& mt = report.metrics;
  const auto row = [&out](const char* name, const std::string& value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-24s", name);
    out << buf << value << '\n';
  };
  row("master_seed", std::to_string(cfg.master_seed));
  row("n_devices", std::to_string(cfg.scenario.n_devices));
  row("m", std::to_string(cfg.adversary.m()));
  row("tau", format_g6(cfg.adversary.confidence_threshold));
  row("observation_rounds", std::to_string(cfg.observation_rounds));
  row("attack_rounds", std::to_string(cfg.attack_rounds));
  row("fusion_clean_accuracy", format_g6(mt.fusion_clean_accuracy));
  row("surrogate_agreement", mt.surrogate_agreement ? format_g6(*mt.surrogate_agreement) : "n/a");
  row("attacks_launched", std::to_string(mt.attacks_launched));
  row("attacks_flipped", std::to_string(mt.attacks_flipped));
  row("attack_rate", format_g6(mt.attack_rate));
  row("hit_ratio", mt.hit_ratio ? format_g6(*mt.hit_ratio) : "n/a");
}

void write_round_csv(std::ostream& out, const RunReport& report, bool include_reports) {
  if (include_reports && report.reports.size() != report.records.size()) {
    throw InputError("run report holds no report vectors; evaluate with keep_reports");
  }
  const int n = report.config.scenario.n_devices;
  out << kRoundColumns;
  if (include_reports) {
    for (int i = 0; i < n; ++i) out << ",clean_" << i;
    for (int i = 0; i < n; ++i) out << ",attacked_" << i;
  }
  out << '\n';
  for (std::size_t k = 0; k < report.records.size(); ++k) {
    const AttackRecord& r = report.records[k];
    out << r.round_id << ',' << r.true_label << ',' << r.clean_decision << ',' << r.attacked_decision << ','
        << (r.launched ? 1 : 0) << ',' << r.inferred_label << ',' << format_g6(r.confidence) << ','
        << (r.flipped ? 1 : 0);
    if (include_reports) {
      for (double v : report.reports[k].clean) out << ',' << format_g17(v);
      for (double v : report.reports[k].attacked) out << ',' << format_g17(v);
    }
    out << '\n';
  }
}

std::vector<DumpedRound> read_round_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kRoundColumns, 0) != 0) {
    throw InputError("missing or unexpected round CSV header");
  }
  const std::size_t extra = split_csv(line).size() - kRoundFieldCount;
  if (extra % 2 != 0) throw InputError("round CSV header has an odd number of report columns");
  const auto n = static_cast<Eigen::Index>(extra / 2);

  std::vector<DumpedRound> rounds;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != kRoundFieldCount + extra) {
      throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(kRoundFieldCount + extra) +
                       " fields");
    }
    DumpedRound d;
    d.record.round_id = static_cast<int>(to_integer(f[0], lineno));
    d.record.true_label = static_cast<int>(to_integer(f[1], lineno));
    d.record.clean_decision = static_cast<int>(to_integer(f[2], lineno));
    d.record.attacked_decision = static_cast<int>(to_integer(f[3], lineno));
    d.record.launched = to_integer(f[4], lineno) != 0;
    d.record.inferred_label = static_cast<int>(to_integer(f[5], lineno));
    d.record.confidence = to_double(f[6], lineno);
    d.record.flipped = to_integer(f[7], lineno) != 0;
    d.clean.resize(n);
    d.attacked.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.clean[i] = to_double(f[kRoundFieldCount + static_cast<std::size_t>(i)], lineno);
      d.attacked[i] = to_double(f[kRoundFieldCount + static_cast<std::size_t>(n + i)], lineno);
    }
    rounds.push_back(std::move(d));
  }
  return rounds;
}

}  // namespace pma

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pma/simulator.hpp"

namespace pma {

struct SweepLists {
  std::vector<int> m_values;
  std::vector<double> tau_values;
  std::vector<std::uint64_t> seeds;

  bool operator==(const SweepLists&) const = default;
};

struct OutputPaths {
  std::string csv;      // per-round CSV for `run`, sweep CSV for `sweep`
  std::string summary;  // markdown summary for `sweep`
  bool dump_rounds = false;

  bool operator==(const OutputPaths&) const = default;
};

/// Everything a config document can set. Absent keys take the defaults of
/// RunConfig; absent sweep lists default to the run's own m, tau and seed.
struct ConfigDocument {
  RunConfig run;
  SweepLists sweep;
  OutputPaths output;

  bool operator==(const ConfigDocument&) const = default;
};

/// Parses a JSON config document. Unknown keys, wrong types and violated
/// invariants raise ConfigError naming the dotted key path; syntax errors
/// report line and column.
ConfigDocument parse_config(std::string_view text);
ConfigDocument load_config(const std::filesystem::path& path);

/// Canonical form: every field present, keys sorted, two-space indent.
/// parse_config(to_canonical(doc)) == doc.
std::string to_canonical(const ConfigDocument& doc);

}  // namespace pma

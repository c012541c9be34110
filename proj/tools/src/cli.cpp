#include "pma/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "pma/config.hpp"
#include "pma/errors.hpp"
#include "pma/fusion.hpp"
#include "pma/report_io.hpp"
#include "pma/simulator.hpp"

namespace pma::cli {
namespace {

ConfigDocument load(const std::string& path) {
  return path.empty() ? parse_config("") : load_config(path);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  return f;
}

// Maps exceptions to exit codes and prints a one-line diagnostic.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ConfigDocument doc = load(opts.config_path);
    if (opts.seed) doc.run.master_seed = *opts.seed;
    const std::string csv_path = opts.out_path.empty() ? doc.output.csv : opts.out_path;
    const bool dump = opts.dump_rounds || doc.output.dump_rounds;
    if (dump && csv_path.empty()) throw ConfigError("--dump-rounds needs an output path", "output.csv");

    const RunReport report = run(doc.run, dump);
    write_run_summary(out, report);

    if (!csv_path.empty()) {
      std::ofstream csv = open_output(csv_path);
      write_round_csv(csv, report, dump);
      if (!csv) throw InputError("failed writing '" + csv_path + "'");
    }
    if (dump) {
      std::ofstream model = open_output(csv_path + ".fusion");
      write_fusion_model(model, report.fusion);
    }
  });
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ConfigDocument doc = load(opts.config_path);
    if (opts.jobs < 0) throw ConfigError("must be >= 0", "--jobs");
    const int jobs = opts.jobs > 0 ? opts.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    const auto rows = sweep(doc.run, doc.sweep.m_values, doc.sweep.tau_values, doc.sweep.seeds, jobs);
    const auto cells = aggregate(rows);

    const std::string csv_path = opts.out_path.empty() ? doc.output.csv : opts.out_path;
    std::string summary_path = doc.output.summary;
    if (summary_path.empty() && !csv_path.empty()) summary_path = csv_path + ".md";

    if (csv_path.empty()) {
      write_sweep_csv(out, rows);
    } else {
      std::ofstream csv = open_output(csv_path);
      write_sweep_csv(csv, rows);
    }
    if (summary_path.empty()) {
      out << '\n';
      write_sweep_summary(out, cells);
    } else {
      std::ofstream md = open_output(summary_path);
      write_sweep_summary(md, cells);
      out << "wrote " << rows.size() << " rows";
      if (!csv_path.empty()) out << " to " << csv_path;
      out << " and summary to " << summary_path << '\n';
    }
  });
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate surrogate-model attacks on a fusion center"};
  app.require_subcommand(1);

  RunOptions run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "one run; prints a summary, optionally writes per-round CSV");
  run_cmd->add_option("--config", run_opts.config_path, "JSON config document");
  run_cmd->add_option("--seed", run_opts.seed, "override master_seed");
  run_cmd->add_option("--out", run_opts.out_path, "per-round CSV path");
  run_cmd->add_flag("--dump-rounds", run_opts.dump_rounds, "include report vectors and write <out>.fusion");

  SweepOptions sweep_opts;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "factorial sweep over m, tau and seeds");
  sweep_cmd->add_option("--config", sweep_opts.config_path, "JSON config document");
  sweep_cmd->add_option("--out", sweep_opts.out_path, "sweep CSV path");
  sweep_cmd->add_option("--jobs", sweep_opts.jobs, "worker threads (0 = hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kConfigError;
  }

  if (run_cmd->parsed()) return cmd_run(run_opts, out, err);
  return cmd_sweep(sweep_opts, out, err);
}

}  // namespace pma::cli

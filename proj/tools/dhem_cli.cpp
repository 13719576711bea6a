// dhem: run benchmark studies, theory probes and table rendering.

#include "dhem/bench/config.h"
#include "dhem/bench/probes.h"
#include "dhem/bench/study.h"
#include "dhem/errors.h"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace dhem;

namespace {

int cmd_run(const fs::path& config_path, const std::string& out_dir, bool trace_flag, int jobs) {
  const bench::RunConfig cfg = bench::load_config(config_path);
  const fs::path out = out_dir.empty() ? cfg.output : fs::path(out_dir);
  const bool trace = trace_flag || cfg.trace;
  const auto result = bench::run_study(cfg, jobs, trace);
  bench::write_study(result, out, trace);
  std::cout << bench::emit_table(result.summaries).text;
  return 0;
}

int cmd_probe(const std::string& name, const fs::path& out, const fs::path& dataset) {
  const auto reports = bench::run_probe(name, dataset);
  fs::create_directories(out);
  std::ofstream f(out / ("probe_" + name + ".csv"));
  if (!f) throw ConfigError("cannot write to '" + out.string() + "'");
  write_probe_csv(f, reports);
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << r.name << ": " << r.statistic << " [" << r.criterion << "] " << (r.pass ? "pass" : "FAIL") << '\n';
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

int cmd_table(const fs::path& in) {
  std::ifstream f(in / "summary.csv");
  if (!f) throw ConfigError("no summary.csv in '" + in.string() + "'");
  const auto summaries = bench::read_summary_csv(f);
  std::cout << bench::emit_table(summaries).text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained EM benchmarks"};
  app.require_subcommand(1);

  std::string config, out_dir;
  bool trace = false;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run a replication study from a config file");
  run->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_flag("--trace", trace, "Write per-iteration traces");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string probe_name, probe_out = "probes", dataset = "data/aarset.txt";
  auto* probe = app.add_subcommand("probe", "Run a numeric theory probe");
  probe->add_option("--name", probe_name, "Probe name or 'all'")->required();
  probe->add_option("--out", probe_out, "Output directory");
  probe->add_option("--dataset", dataset, "Failure-time file for the Weibull probes");

  std::string table_in;
  auto* table = app.add_subcommand("table", "Render summary.csv from a study directory");
  table->add_option("--in", table_in, "Study output directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, out_dir, trace, jobs);
    if (*probe) return cmd_probe(probe_name, probe_out, dataset);
    if (*table) return cmd_table(table_in);
  } catch (const dhem::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

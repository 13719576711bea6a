#pragma once

#include "dhem/bench/config.h"
#include "dhem/types.h"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace dhem::bench {

// Error metrics reported for each model, in table order.
std::vector<std::string> metric_names(ModelKind model);

struct ReplicationRecord {
  Variant method = Variant::EM;
  int replication = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::Failed;
  int iterations = 0;
  double final_r = 1.0;
  double final_xi = 0.0;
  double loglik = 0.0;
  bool success = false;
  bool monotone = true;  // no observed log-likelihood decrease beyond 1e-10
  std::vector<double> metrics;  // aligned with metric_names
  std::string message;
  std::vector<TraceRecord> trace;  // kept only when tracing
};

struct MetricStat {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
};

struct ReplicationSummary {
  std::string method;
  std::vector<MetricStat> metrics;
  double success_rate = 0.0;
  int replications = 0;
  std::uint64_t seed = 0;
  double mean_iterations = 0.0;
  double mean_final_r = 0.0;
};

struct StudyResult {
  ModelKind model = ModelKind::Zip;
  std::vector<std::string> metrics;
  std::vector<ReplicationRecord> records;  // replication-major, methods in config order
  std::vector<ReplicationSummary> summaries;
};

// Sample mean and standard deviation (n - 1 denominator, 0 for n < 2) by
// the two-pass algorithm.
MetricStat mean_sd(std::span<const double> values);

// Runs every configured method on every replication. Replications are spread
// over `jobs` threads; results do not depend on the thread count. Errors
// inside a replication mark it failed with metrics at the last valid
// parameters.
StudyResult run_study(const RunConfig& cfg, int jobs = 1, bool keep_trace = false);

// Error metrics are averaged over the successful replications (NaN when
// none succeeded); success rate, iterations and final r over all of them.
ReplicationSummary summarize(std::span<const ReplicationRecord> records, const std::vector<std::string>& metrics,
                             std::uint64_t base_seed);

struct TableOutput {
  std::string text;  // aligned columns: method, metrics as "mean (sd)", success, replications
  std::string csv;   // summary CSV
};

TableOutput emit_table(std::span<const ReplicationSummary> summaries);

// Inverse of the summary CSV written by emit_table.
std::vector<ReplicationSummary> read_summary_csv(std::istream& in);

// summary.csv, table.txt, replications.csv and, when tracing,
// trace_<method>.csv under dir.
void write_study(const StudyResult& result, const std::filesystem::path& dir, bool trace);

}  // namespace dhem::bench

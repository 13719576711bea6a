#include "dhem/bench/study.h"

#include "dhem/bench/data.h"
#include "dhem/diagnostics.h"
#include "dhem/em_core.h"
#include "dhem/errors.h"
#include "dhem/gmm.h"
#include "dhem/weibull.h"
#include "dhem/zip.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace dhem::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class Params>
void fill_run(ReplicationRecord& rec, const RunResult<Params>& res, bool keep_trace) {
  rec.status = res.status;
  rec.iterations = res.iterations;
  rec.final_r = res.final_r;
  rec.final_xi = res.final_xi;
  rec.loglik = res.loglik;
  rec.message = res.message;
  rec.monotone = true;
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& t : res.trace) {
    if (!t.accepted) continue;
    if (t.loglik < prev - 1e-10) rec.monotone = false;
    prev = t.loglik;
  }
  if (keep_trace) rec.trace = res.trace;
}

// Runs fn and turns any error into a failed record; `fallback` supplies the
// metrics of the last valid parameters.
template <class Fn, class Fallback>
void guarded(ReplicationRecord& rec, Fn&& fn, Fallback&& fallback) {
  try {
    fn();
  } catch (const std::exception& e) {
    rec.status = RunStatus::Failed;
    rec.success = false;
    rec.message = e.what();
    rec.metrics = fallback();
  }
}

std::vector<double> zip_metrics(const zip::ZipParams& est, const ZipSetup& setup) {
  return {est.pi - setup.pi_true, est.lambda - setup.lambda_true};
}

std::vector<double> gmm_metrics(const gmm::GmmParams& est, const gmm::GmmParams& truth) {
  const auto e = gmm::gmm_error_metrics(est, truth);
  return {e.weights, e.means, e.covs};
}

bool gmm_success(const gmm::GmmModel& model, const RunResult<gmm::GmmParams>& res) {
  if (!res.converged()) return false;
  for (const auto& c : res.params.covs) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 1e-6)) return false;
  }
  const Responsibilities z = annealed_posterior(model, res.params, 1.0);
  return (z.colwise().sum().array() >= 1.0).all();
}

std::vector<double> weibull_metrics(const weibull::WeibullModel& model, const weibull::WeibullParams& p,
                                    const Responsibilities& resp) {
  const Eigen::Vector3d lam = p.lambda();
  double g1 = kNaN, g3 = kNaN;
  if (resp.rows() == static_cast<Eigen::Index>(model.times().size())) {
    std::tie(g1, g3) = weibull::report_shape_gradients(model, p, resp);
  }
  return {p.weights(0), p.weights(1), p.weights(2), lam(0), lam(1), lam(2), p.beta(0), p.beta(2), g1, g3};
}

std::vector<ReplicationRecord> run_replication(const RunConfig& cfg, int rep, const std::vector<double>* times,
                                               bool keep_trace) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(rep);
  std::vector<ReplicationRecord> out;
  out.reserve(cfg.methods.size());
  auto blank = [&](Variant m) {
    ReplicationRecord r;
    r.method = m;
    r.replication = rep;
    r.seed = seed;
    return r;
  };

  switch (cfg.model) {
    case ModelKind::Zip: {
      const zip::ZipParams init{cfg.zip.pi_init, cfg.zip.lambda_init};
      const auto y = generate_zip_data({cfg.zip.pi_true, cfg.zip.lambda_true}, cfg.sample_size, seed);
      const zip::ZipModel model(y, cfg.zip.pi_min);
      for (Variant m : cfg.methods) {
        ReplicationRecord rec = blank(m);
        guarded(
            rec,
            [&] {
              const auto res = run_variant(model, m, init, cfg.schedule);
              fill_run(rec, res, keep_trace);
              rec.metrics = zip_metrics(res.params, cfg.zip);
              rec.success = res.converged();
            },
            [&] { return zip_metrics(init, cfg.zip); });
        out.push_back(std::move(rec));
      }
      break;
    }
    case ModelKind::Gmm: {
      const auto& truth = cfg.gmm.truth;
      const gmm::GmmModel model(generate_gmm_data(truth, cfg.sample_size, seed),
                                {cfg.gmm.delta_sep, cfg.schedule.damping_grid});
      std::optional<gmm::GmmParams> init;
      std::string init_error;
      try {
        init = random_gmm_init(model, truth.components(), seed);
      } catch (const std::exception& e) {
        init_error = e.what();
      }
      for (Variant m : cfg.methods) {
        ReplicationRecord rec = blank(m);
        if (!init) {
          rec.message = init_error;
          rec.metrics.assign(3, kNaN);
          out.push_back(std::move(rec));
          continue;
        }
        guarded(
            rec,
            [&] {
              const auto res = run_variant(model, m, *init, cfg.schedule);
              fill_run(rec, res, keep_trace);
              rec.metrics = gmm_metrics(res.params, truth);
              rec.success = gmm_success(model, res);
            },
            [&] { return gmm_metrics(*init, truth); });
        out.push_back(std::move(rec));
      }
      break;
    }
    case ModelKind::Weibull: {
      const weibull::WeibullModel model(*times);
      const auto init = weibull::default_init(*times, cfg.weibull.beta_init);
      for (Variant m : cfg.methods) {
        ReplicationRecord rec = blank(m);
        guarded(
            rec,
            [&] {
              const auto res = run_variant(model, m, init, cfg.schedule);
              fill_run(rec, res, keep_trace);
              rec.metrics = weibull_metrics(model, res.params, res.last_resp);
              rec.success = res.converged();
            },
            [&] { return weibull_metrics(model, init, Responsibilities()); });
        out.push_back(std::move(rec));
      }
      break;
    }
  }
  return out;
}

std::string pad(const std::string& s, std::size_t w, bool left) {
  if (s.size() >= w) return s;
  return left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<std::string> metric_names(ModelKind model) {
  switch (model) {
    case ModelKind::Zip: return {"pi_bias", "lambda_bias"};
    case ModelKind::Gmm: return {"pi_l1", "mu_l2", "sigma_fro"};
    case ModelKind::Weibull:
      return {"pi1", "pi2", "pi3", "lambda1", "lambda2", "lambda3", "beta1", "beta3", "grad_beta1", "grad_beta3"};
  }
  return {};
}

MetricStat mean_sd(std::span<const double> values) {
  MetricStat s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  if (values.size() < 2) return s;
  double ss = 0.0, comp = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    ss += d * d;
    comp += d;
  }
  s.sd = std::sqrt(std::max(0.0, (ss - comp * comp / n) / (n - 1.0)));
  return s;
}

ReplicationSummary summarize(std::span<const ReplicationRecord> records, const std::vector<std::string>& metrics,
                             std::uint64_t base_seed) {
  ReplicationSummary s;
  if (!records.empty()) s.method = std::string(to_string(records.front().method));
  s.replications = static_cast<int>(records.size());
  s.seed = base_seed;
  std::vector<double> col;
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    col.clear();
    for (const auto& r : records) {
      if (r.success) col.push_back(r.metrics[m]);
    }
    MetricStat st = col.empty() ? MetricStat{"", kNaN, kNaN} : mean_sd(col);
    st.name = metrics[m];
    s.metrics.push_back(st);
  }
  double successes = 0.0, iters = 0.0, rs = 0.0;
  for (const auto& r : records) {
    successes += r.success ? 1.0 : 0.0;
    iters += r.iterations;
    rs += r.final_r;
  }
  if (!records.empty()) {
    const double n = static_cast<double>(records.size());
    s.success_rate = successes / n;
    s.mean_iterations = iters / n;
    s.mean_final_r = rs / n;
  }
  return s;
}

StudyResult run_study(const RunConfig& cfg, int jobs, bool keep_trace) {
  cfg.validate();
  std::vector<double> times;
  if (cfg.model == ModelKind::Weibull) times = load_dataset(cfg.weibull.dataset);

  const int reps = cfg.replications;
  std::vector<std::vector<ReplicationRecord>> per_rep(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (int rep = next++; rep < reps; rep = next++) {
      try {
        per_rep[static_cast<std::size_t>(rep)] = run_replication(cfg, rep, &times, keep_trace);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  jobs = std::clamp(jobs, 1, std::max(1, reps));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);

  StudyResult result;
  result.model = cfg.model;
  result.metrics = metric_names(cfg.model);
  for (auto& v : per_rep) {
    for (auto& r : v) result.records.push_back(std::move(r));
  }
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    std::vector<ReplicationRecord> subset;
    for (const auto& r : result.records) {
      if (r.method == cfg.methods[m]) subset.push_back(r);
    }
    result.summaries.push_back(summarize(subset, result.metrics, cfg.base_seed));
  }
  return result;
}

TableOutput emit_table(std::span<const ReplicationSummary> summaries) {
  TableOutput out;
  std::ostringstream csv;
  csv << "method,metric,mean,sd,success_rate,replications,seed\n";
  for (const auto& s : summaries) {
    auto row = [&](const std::string& name, double mean, double sd) {
      csv << s.method << ',' << name << ',' << fmt(mean) << ',' << fmt(sd) << ',' << fmt(s.success_rate) << ','
          << s.replications << ',' << s.seed << '\n';
    };
    for (const auto& m : s.metrics) row(m.name, m.mean, m.sd);
    row("iterations", s.mean_iterations, 0.0);
    row("final_r", s.mean_final_r, 0.0);
  }
  out.csv = csv.str();

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"method"};
  if (!summaries.empty()) {
    for (const auto& m : summaries.front().metrics) header.push_back(m.name);
  }
  header.push_back("success");
  header.push_back("replications");
  cells.push_back(header);
  for (const auto& s : summaries) {
    std::vector<std::string> row{s.method};
    for (const auto& m : s.metrics) row.push_back(short_num(m.mean) + " (" + short_num(m.sd) + ")");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", s.success_rate);
    row.emplace_back(buf);
    row.push_back(std::to_string(s.replications));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream text;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      if (c) text << "  ";
      text << pad(cells[r][c], width[c], c == 0);
    }
    text << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      text << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  out.text = text.str();
  return out;
}

std::vector<ReplicationSummary> read_summary_csv(std::istream& in) {
  std::vector<ReplicationSummary> out;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "method,metric,mean,sd,success_rate,replications,seed") {
        throw ParseError("unexpected summary header", line_no);
      }
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 7) throw ParseError("expected 7 fields", line_no);
    try {
      auto [it, fresh] = index.try_emplace(f[0], out.size());
      if (fresh) {
        ReplicationSummary s;
        s.method = f[0];
        s.success_rate = std::stod(f[4]);
        s.replications = std::stoi(f[5]);
        s.seed = std::stoull(f[6]);
        out.push_back(std::move(s));
      }
      auto& s = out[it->second];
      const double mean = std::stod(f[2]);
      if (f[1] == "iterations") {
        s.mean_iterations = mean;
      } else if (f[1] == "final_r") {
        s.mean_final_r = mean;
      } else {
        s.metrics.push_back({f[1], mean, std::stod(f[3])});
      }
    } catch (const std::logic_error&) {
      throw ParseError("malformed number", line_no);
    }
  }
  return out;
}

void write_study(const StudyResult& result, const std::filesystem::path& dir, bool trace) {
  std::filesystem::create_directories(dir);
  const TableOutput table = emit_table(result.summaries);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw ConfigError("cannot write '" + (dir / name).string() + "'");
    return f;
  };
  open("summary.csv") << table.csv;
  open("table.txt") << table.text;

  std::ofstream reps = open("replications.csv");
  reps << "method,replication,seed,status,iterations,final_r,final_xi,loglik,success,monotone";
  for (const auto& m : result.metrics) reps << ',' << m;
  reps << '\n';
  for (const auto& r : result.records) {
    reps << to_string(r.method) << ',' << r.replication << ',' << r.seed << ',' << to_string(r.status) << ','
         << r.iterations << ',' << fmt(r.final_r) << ',' << fmt(r.final_xi) << ',' << fmt(r.loglik) << ','
         << (r.success ? 1 : 0) << ',' << (r.monotone ? 1 : 0);
    for (double v : r.metrics) reps << ',' << fmt(v);
    reps << '\n';
  }

  if (!trace) return;
  std::map<std::string, std::ofstream> files;
  for (const auto& r : result.records) {
    const std::string name = "trace_" + std::string(to_string(r.method)) + ".csv";
    auto it = files.find(name);
    if (it == files.end()) {
      it = files.emplace(name, open(name)).first;
      it->second << "replication,iter,r,xi,loglik,accepted\n";
    }
    for (const auto& t : r.trace) {
      it->second << r.replication << ',' << t.iter << ',' << fmt(t.r) << ',' << fmt(t.xi) << ',' << fmt(t.loglik)
                 << ',' << (t.accepted ? 1 : 0) << '\n';
    }
  }
}

}  // namespace dhem::bench

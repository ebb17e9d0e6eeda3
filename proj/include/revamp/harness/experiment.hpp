#ifndef REVAMP_HARNESS_EXPERIMENT_HPP
#define REVAMP_HARNESS_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "revamp/engine.hpp"
#include "revamp/errors.hpp"
#include "revamp/harness/config.hpp"
#include "revamp/harness/instance.hpp"
#include "revamp/harness/svg.hpp"
#include "revamp/oracles.hpp"
#include "revamp/strategies.hpp"

namespace revamp::harness {

struct RunRecord {
  double snr_db = 0.0;
  int instance_id = 0;
  std::string strategy;
  bool failed = false;
  std::string failure;
  Eigen::VectorXd x_hat;
  Eigen::VectorXd x_mmse;
  int sweeps_run = 0;
  bool converged = false;
  int rejected_updates = 0;
  int modified_updates = 0;
  double wall_time = 0.0; ///< seconds; not part of the deterministic outputs
};

struct NmseRow {
  double snr_db = 0.0;
  std::string strategy;
  double nmse = 0.0;
  int n_instances = 0; ///< instances entering the NMSE sums
  int n_failed = 0;
  int n_nonconverged = 0;
};

struct NmseReport {
  std::vector<NmseRow> rows; ///< ordered by SNR level, then by configured strategy order

  [[nodiscard]] const NmseRow *find(double snr_db, const std::string &strategy) const {
    for (const NmseRow &r : rows) {
      if (r.snr_db == snr_db && r.strategy == strategy) {
        return &r;
      }
    }
    return nullptr;
  }
};

struct ExperimentResult {
  std::vector<RunRecord> records; ///< ordered by (snr, instance, strategy)
  NmseReport report;
};

/// Oracle plus every configured strategy on one instance.
inline std::vector<RunRecord> run_instance(const ExperimentConfig &config, std::size_t snr_index, int instance_id) {
  using clock = std::chrono::steady_clock;
  const Instance inst = generate_instance(config, snr_index, instance_id);
  const Eigen::VectorXd x_mmse = brute_force_mmse(inst.problem).mean;
  const RunOptions opts{config.max_sweeps, config.tol};

  std::vector<RunRecord> out;
  out.reserve(config.strategies.size());
  for (const std::string &name : config.strategies) {
    RunRecord rec;
    rec.snr_db = config.snr_grid_db[snr_index];
    rec.instance_id = instance_id;
    rec.strategy = name;
    rec.x_mmse = x_mmse;
    const auto start = clock::now();
    if (name == kLmmseBaseline) {
      rec.x_hat = lmmse(inst.problem).mean;
      rec.converged = true;
    } else {
      try {
        const EstimateReport r = run(inst.problem, Strategy::parse(name), opts);
        rec.x_hat = r.x_hat;
        rec.sweeps_run = r.sweeps_run;
        rec.converged = r.converged;
        rec.rejected_updates = r.rejected_updates;
        rec.modified_updates = r.modified_updates;
      } catch (const Error &e) {
        rec.failed = true;
        rec.failure = e.what();
      }
    }
    rec.wall_time = std::chrono::duration<double>(clock::now() - start).count();
    out.push_back(std::move(rec));
  }
  return out;
}

/// NMSE_l = sum_i ||x_i - x_mmse_i||^2 / sum_i ||x_mmse_i||^2 over the
/// non-failed runs of each strategy at SNR level l.
inline NmseReport aggregate(const ExperimentConfig &config, const std::vector<RunRecord> &records) {
  NmseReport rep;
  for (double snr : config.snr_grid_db) {
    for (const std::string &name : config.strategies) {
      NmseRow row;
      row.snr_db = snr;
      row.strategy = name;
      double num = 0.0;
      double den = 0.0;
      for (const RunRecord &r : records) {
        if (r.snr_db != snr || r.strategy != name) {
          continue;
        }
        if (r.failed) {
          ++row.n_failed;
          continue;
        }
        ++row.n_instances;
        if (!r.converged) {
          ++row.n_nonconverged;
        }
        num += (r.x_hat - r.x_mmse).squaredNorm();
        den += r.x_mmse.squaredNorm();
      }
      row.nmse = row.n_instances > 0 ? num / den : std::numeric_limits<double>::quiet_NaN();
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

/// Runs every (SNR, instance) task on a worker pool. Each task owns its RNG
/// stream and writes into a fixed slot, so results do not depend on threads.
inline ExperimentResult run_experiment(const ExperimentConfig &config, unsigned threads = 1) {
  validate(config);
  const std::size_t levels = config.snr_grid_db.size();
  const auto per_level = static_cast<std::size_t>(config.instances_per_snr);
  const std::size_t tasks = levels * per_level;
  std::vector<std::vector<RunRecord>> slots(tasks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      try {
        slots[t] = run_instance(config, t / per_level, static_cast<int>(t % per_level));
      } catch (...) {
        const std::lock_guard lock(failure_mu);
        if (!failure) {
          failure = std::current_exception();
        }
        next = tasks;
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread &th : pool) {
      th.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  ExperimentResult result;
  result.records.reserve(tasks * config.strategies.size());
  for (std::vector<RunRecord> &s : slots) {
    for (RunRecord &r : s) {
      result.records.push_back(std::move(r));
    }
  }
  result.report = aggregate(config, result.records);
  return result;
}

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string fmt_vector(const Eigen::VectorXd &v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) {
      out += ' ';
    }
    out += fmt_double(v(i));
  }
  return out;
}

// CSV field quoting for free text.
inline std::string quote(const std::string &s) {
  std::string out = "\"";
  for (char ch : s) {
    out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  }
  return out + "\"";
}

} // namespace detail

inline double to_db(double nmse) {
  return nmse > 0.0 ? 10.0 * std::log10(nmse) : (nmse == 0.0 ? -std::numeric_limits<double>::infinity() : nmse);
}

/// snr_db,strategy,nmse,nmse_db,n_instances,n_failed,n_nonconverged
inline void write_summary_csv(const NmseReport &rep, std::ostream &os) {
  os << "snr_db,strategy,nmse,nmse_db,n_instances,n_failed,n_nonconverged\n";
  for (const NmseRow &r : rep.rows) {
    os << detail::fmt_double(r.snr_db) << ',' << r.strategy << ',' << detail::fmt_double(r.nmse) << ','
       << detail::fmt_double(to_db(r.nmse)) << ',' << r.n_instances << ',' << r.n_failed << ','
       << r.n_nonconverged << '\n';
  }
}

/// One row per (snr, instance, strategy); vectors are space separated inside one field.
inline void write_runs_csv(const std::vector<RunRecord> &records, std::ostream &os) {
  os << "snr_db,instance_id,strategy,status,sweeps_run,converged,rejected_updates,modified_updates,"
        "x_hat,x_mmse,failure\n";
  for (const RunRecord &r : records) {
    os << detail::fmt_double(r.snr_db) << ',' << r.instance_id << ',' << r.strategy << ','
       << (r.failed ? "failed" : "ok") << ',' << r.sweeps_run << ',' << (r.converged ? 1 : 0) << ','
       << r.rejected_updates << ',' << r.modified_updates << ',' << detail::fmt_vector(r.x_hat) << ','
       << detail::fmt_vector(r.x_mmse) << ',' << detail::quote(r.failure) << '\n';
  }
}

inline void write_timing_csv(const std::vector<RunRecord> &records, std::ostream &os) {
  os << "snr_db,instance_id,strategy,wall_time_s\n";
  for (const RunRecord &r : records) {
    os << detail::fmt_double(r.snr_db) << ',' << r.instance_id << ',' << r.strategy << ','
       << detail::fmt_double(r.wall_time) << '\n';
  }
}

/// One series per strategy, NMSE in dB.
inline std::vector<Series> to_series(const NmseReport &rep) {
  std::vector<Series> out;
  for (const NmseRow &r : rep.rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Series &s) { return s.name == r.strategy; });
    if (it == out.end()) {
      out.push_back({r.strategy, {}});
      it = std::prev(out.end());
    }
    it->points.emplace_back(r.snr_db, to_db(r.nmse));
  }
  return out;
}

/// Writes runs.csv, summary.csv, timing.csv and (optionally) nmse.svg into dir.
inline void write_outputs(const ExperimentResult &res, const std::filesystem::path &dir, bool svg) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char *name) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) {
      throw Error("cannot write '" + (dir / name).string() + "'");
    }
    return os;
  };
  {
    auto os = open("summary.csv");
    write_summary_csv(res.report, os);
  }
  {
    auto os = open("runs.csv");
    write_runs_csv(res.records, os);
  }
  {
    auto os = open("timing.csv");
    write_timing_csv(res.records, os);
  }
  if (svg) {
    auto os = open("nmse.svg");
    write_nmse_svg(to_series(res.report), os);
  }
}

} // namespace revamp::harness

#endif // REVAMP_HARNESS_EXPERIMENT_HPP

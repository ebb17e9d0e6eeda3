// revamp run | verify | oracle
//
// Exit status: 0 success, 1 configuration or command-line error, 2 runtime
// failure (including a failed verify check).

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "revamp/harness/config.hpp"
#include "revamp/harness/experiment.hpp"
#include "revamp/harness/instance.hpp"
#include "revamp/harness/verify.hpp"
#include "revamp/oracles.hpp"

namespace {

using namespace revamp;
using namespace revamp::harness;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

// REVAMP_THREADS wins over --threads when set.
unsigned resolve_threads(unsigned flag) {
  const char *env = std::getenv("REVAMP_THREADS");
  if (env == nullptr || *env == '\0') {
    return flag;
  }
  const std::string s(env);
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size() || v < 1) {
      throw std::invalid_argument(s);
    }
    return static_cast<unsigned>(v);
  } catch (const std::exception &) {
    throw ConfigError("environment variable REVAMP_THREADS: expected a positive integer, got '" + s + "'");
  }
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> strategies;
  unsigned threads = 1;
};

int cmd_run(const RunArgs &a) {
  ExperimentConfig c = load_config(a.config);
  if (a.seed) {
    c.master_seed = *a.seed;
  }
  if (a.out) {
    c.output_path = *a.out;
  }
  if (a.strategies) {
    c.strategies = parse_strategy_list(*a.strategies);
  }
  validate(c);
  const unsigned threads = resolve_threads(a.threads);

  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult res = run_experiment(c, threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_outputs(res, c.output_path, c.emit_svg);

  std::cout << "scenario " << to_string(c.scenario) << ", " << c.m << "x" << c.n << ", "
            << c.instances_per_snr << " instances x " << c.snr_grid_db.size() << " SNR levels, " << threads
            << " thread(s), " << std::fixed << std::setprecision(2) << secs << " s\n";
  std::cout << std::defaultfloat << std::setprecision(4);
  for (const NmseRow &r : res.report.rows) {
    std::cout << std::setw(6) << r.snr_db << " dB  " << std::left << std::setw(22) << r.strategy << std::right
              << std::setw(10) << to_db(r.nmse) << " dB";
    if (r.n_failed > 0 || r.n_nonconverged > 0) {
      std::cout << "  (failed " << r.n_failed << ", not converged " << r.n_nonconverged << ")";
    }
    std::cout << '\n';
  }
  std::cout << "wrote " << (std::filesystem::path(c.output_path) / "summary.csv").string() << '\n';
  return kOk;
}

int cmd_verify(std::uint64_t seed, bool full, bool qualitative, unsigned threads) {
  VerifyScale scale = full ? VerifyScale::full() : VerifyScale::quick();
  scale.qualitative = scale.qualitative || qualitative;
  scale.threads = resolve_threads(threads);
  bool all = true;
  run_all_checks(seed, scale, [&](const CheckResult &r) {
    std::cout << format_check(r) << std::endl;
    all = all && r.passed;
  });
  std::cout << (all ? "all checks passed" : "some checks failed") << std::endl;
  return all ? kOk : kRuntimeError;
}

int cmd_oracle(const std::string &path, std::optional<std::uint64_t> seed) {
  ExperimentConfig c = load_config(path);
  if (seed) {
    c.master_seed = *seed;
  }
  std::cout << "snr_db,instances,assignments,total_s,per_instance_s\n";
  double grand = 0.0;
  for (std::size_t l = 0; l < c.snr_grid_db.size(); ++l) {
    double total = 0.0;
    std::uint64_t assignments = 1;
    for (int i = 0; i < c.instances_per_snr; ++i) {
      const Instance inst = generate_instance(c, l, i);
      assignments = 1;
      for (const MixturePrior &p : inst.problem.priors) {
        assignments *= p.size();
      }
      const auto start = std::chrono::steady_clock::now();
      (void)brute_force_mmse(inst.problem);
      total += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    grand += total;
    std::cout << c.snr_grid_db[l] << ',' << c.instances_per_snr << ',' << assignments << ',' << total << ','
              << total / c.instances_per_snr << '\n';
  }
  std::cerr << "oracle total " << grand << " s\n";
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"EP with negative-variance message strategies on linear Gaussian models"};
  app.require_subcommand(1);

  RunArgs run_args;
  std::uint64_t run_seed = 0;
  std::string run_out;
  std::string run_strategies;
  auto *run = app.add_subcommand("run", "SNR sweep over all configured strategies; writes CSV and SVG");
  run->add_option("--config", run_args.config, "experiment config file")->required();
  auto *seed_opt = run->add_option("--seed", run_seed, "override master_seed");
  auto *out_opt = run->add_option("--out", run_out, "override output_path");
  auto *strat_opt = run->add_option("--strategies", run_strategies, "comma list, overrides the config");
  run->add_option("--threads", run_args.threads, "worker threads (REVAMP_THREADS overrides)")
      ->check(CLI::PositiveNumber);

  std::uint64_t verify_seed = 20240601;
  bool verify_full = false;
  bool verify_qualitative = false;
  unsigned verify_threads = 1;
  auto *verify = app.add_subcommand("verify", "randomized invariant and property checks");
  verify->add_option("--seed", verify_seed, "base seed");
  verify->add_flag("--full", verify_full, "acceptance-scale sample counts, NMSE-ordering check included");
  verify->add_flag("--qualitative", verify_qualitative, "include the NMSE-ordering check at quick scale");
  verify->add_option("--threads", verify_threads, "worker threads for the experiment checks")
      ->check(CLI::PositiveNumber);

  std::string oracle_config;
  std::uint64_t oracle_seed = 0;
  auto *oracle = app.add_subcommand("oracle", "brute-force MMSE timing only");
  oracle->add_option("--config", oracle_config, "experiment config file")->required();
  auto *oracle_seed_opt = oracle->add_option("--seed", oracle_seed, "override master_seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      if (*seed_opt) {
        run_args.seed = run_seed;
      }
      if (*out_opt) {
        run_args.out = run_out;
      }
      if (*strat_opt) {
        run_args.strategies = run_strategies;
      }
      return cmd_run(run_args);
    }
    if (*verify) {
      return cmd_verify(verify_seed, verify_full, verify_qualitative, verify_threads);
    }
    if (*oracle) {
      return cmd_oracle(oracle_config, *oracle_seed_opt ? std::optional<std::uint64_t>(oracle_seed) : std::nullopt);
    }
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}

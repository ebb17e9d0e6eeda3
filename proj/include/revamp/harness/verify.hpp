#ifndef REVAMP_HARNESS_VERIFY_HPP
#define REVAMP_HARNESS_VERIFY_HPP

// Randomised invariant and property checks on small instances. Used by the
// `verify` subcommand (reduced counts) and by the acceptance binary (full
// counts). Every reference value is produced on a path independent of the
// code under test: LU factorisations of recomputed precision matrices,
// joint-Gaussian conditioning, the brute-force oracle or quadrature.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "revamp/engine.hpp"
#include "revamp/errors.hpp"
#include "revamp/harness/config.hpp"
#include "revamp/harness/experiment.hpp"
#include "revamp/harness/instance.hpp"
#include "revamp/oracles.hpp"
#include "revamp/priors.hpp"
#include "revamp/quadrature.hpp"
#include "revamp/strategies.hpp"

namespace revamp::harness {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Sample counts for every check.
struct VerifyScale {
  int gaussian_instances = 100;
  int determinant_runs = 50;
  int pd_runs = 200;
  int acrevamp_runs = 200;
  int extrinsic_draws = 1000;
  int rank_one_steps = 200;
  int oracle_scalar_draws = 500;
  int oracle_gaussian_draws = 100;
  int experiment_instances = 50;
  int kld_candidates = 100;
  bool qualitative = true; ///< include the NMSE-ordering check, which needs full sample counts
  unsigned threads = 1;

  static VerifyScale full() { return {}; }

  static VerifyScale quick() {
    VerifyScale s;
    s.gaussian_instances = 20;
    s.determinant_runs = 10;
    s.pd_runs = 40;
    s.acrevamp_runs = 40;
    s.extrinsic_draws = 200;
    s.oracle_scalar_draws = 100;
    s.oracle_gaussian_draws = 20;
    s.experiment_instances = 5;
    s.kld_candidates = 50;
    s.qualitative = false;
    return s;
  }
};

namespace verify_detail {

inline double unif(std::mt19937_64 &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double log_unif(std::mt19937_64 &rng, double lo, double hi) {
  return std::exp(unif(rng, std::log(lo), std::log(hi)));
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      m(r, c) = normal(rng);
    }
  }
  return m;
}

/// Mixture with 1..max_k components, means in [-2, 2], variances in [0.01, 2].
inline MixturePrior random_mixture(std::mt19937_64 &rng, int max_k) {
  const int k = std::uniform_int_distribution<int>(1, max_k)(rng);
  std::vector<double> w(static_cast<std::size_t>(k)), m(w.size()), v(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = unif(rng, 0.1, 1.0);
    m[i] = unif(rng, -2.0, 2.0);
    v[i] = log_unif(rng, 0.01, 2.0);
  }
  double total = 0.0;
  for (double x : w) {
    total += x;
  }
  double rest = 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    w[i] /= total;
    rest += w[i];
  }
  w[0] = 1.0 - rest;
  return MixturePrior(w, m, v);
}

/// y = A x + v with A ~ N(0, 1/N) and x drawn from the priors.
inline LinearProblem random_problem(Eigen::Index rows, std::vector<MixturePrior> priors, double noise_var,
                                    std::mt19937_64 &rng) {
  LinearProblem p;
  const auto cols = static_cast<Eigen::Index>(priors.size());
  p.a = gaussian_matrix(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
  p.priors = std::move(priors);
  p.noise_var = noise_var;
  Eigen::VectorXd x(cols);
  for (Eigen::Index i = 0; i < cols; ++i) {
    x(i) = sample_mixture(p.priors[static_cast<std::size_t>(i)], rng);
  }
  p.y = p.a * x + gaussian_matrix(rows, 1, std::sqrt(noise_var), rng).col(0);
  return p;
}

inline LinearProblem random_gaussian_problem(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng) {
  std::vector<MixturePrior> priors;
  for (Eigen::Index i = 0; i < cols; ++i) {
    priors.push_back(MixturePrior::gaussian(unif(rng, -1.0, 1.0), log_unif(rng, 0.1, 2.0)));
  }
  return random_problem(rows, std::move(priors), log_unif(rng, 1e-3, 1.0), rng);
}

/// An instance of a stock scenario at a random SNR level of the 0..50 dB grid.
inline LinearProblem scenario_problem(Scenario sc, std::mt19937_64 &rng, std::size_t *snr_index = nullptr) {
  ExperimentConfig cfg;
  cfg.scenario = sc;
  if (sc == Scenario::bpsk) {
    cfg.m = 20;
  }
  cfg.master_seed = rng();
  const auto level = std::uniform_int_distribution<std::size_t>(0, cfg.snr_grid_db.size() - 1)(rng);
  if (snr_index != nullptr) {
    *snr_index = level;
  }
  return generate_instance(cfg, level, 0).problem;
}

/// A^T A / s2 + Diag(xi), built directly from the problem data.
inline Eigen::MatrixXd precision_of(const LinearProblem &p, const Eigen::VectorXd &xi) {
  Eigen::MatrixXd prec = p.a.transpose() * p.a / p.noise_var;
  prec.diagonal() += xi;
  return prec;
}

/// log |det P| by full-pivot LU after symmetric diagonal scaling, which keeps
/// the LU well conditioned when the diagonal spans many orders of magnitude.
inline double log_abs_det(const Eigen::MatrixXd &p) {
  const Eigen::VectorXd d = p.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = d.asDiagonal() * p * d.asDiagonal();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(scaled);
  double out = -2.0 * d.array().log().sum();
  const Eigen::MatrixXd &u = lu.matrixLU();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    out += std::log(std::abs(u(i, i)));
  }
  return out;
}

/// Covariance recompute through LU on the scaled precision.
inline Eigen::MatrixXd lu_covariance(const Eigen::MatrixXd &prec) {
  const Eigen::VectorXd d = prec.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = d.asDiagonal() * prec * d.asDiagonal();
  return d.asDiagonal() * scaled.fullPivLu().inverse() * d.asDiagonal();
}

/// Exact posterior mean for single-component priors by joint-Gaussian conditioning.
inline Eigen::VectorXd conditioning_mean(const LinearProblem &p) {
  const Eigen::Index n = p.cols();
  Eigen::VectorXd m(n);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i) = p.priors[static_cast<std::size_t>(i)].means()[0];
    v(i) = p.priors[static_cast<std::size_t>(i)].vars()[0];
  }
  const Eigen::MatrixXd cxz = v.asDiagonal() * p.a.transpose();
  const Eigen::MatrixXd szz = p.a * cxz + p.noise_var * Eigen::MatrixXd::Identity(p.rows(), p.rows());
  return m + cxz * szz.fullPivLu().solve(p.y - p.a * m);
}

inline double rel_frobenius(const Eigen::MatrixXd &got, const Eigen::MatrixXd &want) {
  return (got - want).norm() / want.norm();
}

inline std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

template <typename Body>
CheckResult timed(int id, std::string name, Body &&body) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = body();
  } catch (const std::exception &e) {
    r.passed = false;
    r.detail = std::string("unexpected exception: ") + e.what();
  }
  r.id = id;
  r.name = std::move(name);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::array<Strategy, 4> rejecting_strategies() {
  return {{{StrategyKind::persistent, CheckMode::strict},
           {StrategyKind::persistent, CheckMode::relaxed},
           {StrategyKind::nonpersistent, CheckMode::strict},
           {StrategyKind::nonpersistent, CheckMode::relaxed}}};
}

} // namespace verify_detail

/// Single-component priors: every strategy reproduces the exact posterior mean
/// within two sweeps.
inline CheckResult check_gaussian_exactness(std::uint64_t seed, int instances) {
  using namespace verify_detail;
  return timed(1, "Gaussian exactness", [&] {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    int worst_sweeps = 0;
    int failures = 0;
    double engine_seconds = 0.0;
    for (int i = 0; i < instances; ++i) {
      const LinearProblem p = random_gaussian_problem(8, 10, rng);
      const Eigen::VectorXd exact = conditioning_mean(p);
      for (const Strategy &s : Strategy::all()) {
        const auto t0 = std::chrono::steady_clock::now();
        const EstimateReport r = run(p, s);
        engine_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double err = (r.x_hat - exact).cwiseAbs().maxCoeff();
        worst = std::max(worst, err);
        worst_sweeps = std::max(worst_sweeps, r.sweeps_run);
        if (!r.converged || r.sweeps_run > 2 || !(err < 1e-8)) {
          ++failures;
        }
      }
    }
    CheckResult r;
    r.passed = failures == 0 && engine_seconds < 1.0;
    r.detail = std::to_string(instances) + " instances x 7 strategies, max |x_hat - exact| = " + sci(worst) +
               ", max sweeps = " + std::to_string(worst_sweeps) + ", failures = " + std::to_string(failures) +
               ", engine time = " + sci(engine_seconds) + " s";
    return r;
  });
}

/// det C(t) / det C(t+1) = tau_x(t) / tilted variance at every accepted step.
inline CheckResult check_determinant_ratio(std::uint64_t seed, int runs) {
  using namespace verify_detail;
  return timed(2, "Determinant ratio at accepted steps", [&] {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    long steps = 0;
    int failed_runs = 0;
    for (int i = 0; i < runs; ++i) {
      const LinearProblem p = scenario_problem(Scenario::sparse, rng);
      for (const Strategy &s : Strategy::all()) {
        auto observer = [&](const EpState &before, const EpState &after, const StepTrace &tr) {
          if (tr.outcome.decision != Decision::accepted || !tr.candidate) {
            return;
          }
          const double predicted = before.belief_cov(tr.n, tr.n) / tr.candidate->tilted_var;
          const double direct = std::exp(log_abs_det(precision_of(p, after.xi_p)) -
                                         log_abs_det(precision_of(p, before.xi_p)));
          worst = std::max(worst, std::abs(predicted / direct - 1.0));
          ++steps;
        };
        try {
          run(p, s, {}, observer);
        } catch (const Error &) {
          ++failed_runs; // only the ideal strategy may stop on an improper belief
          if (s.kind != StrategyKind::ideal) {
            throw;
          }
        }
      }
    }
    CheckResult r;
    r.passed = worst < 1e-7 && steps > 0;
    r.detail = std::to_string(runs) + " sparse instances x 7 strategies, " + std::to_string(steps) +
               " accepted steps, max relative deviation = " + sci(worst) + " (ideal runs stopped: " +
               std::to_string(failed_runs) + ")";
    return r;
  });
}

/// Persistent and non-persistent strategies keep the belief covariance positive definite.
inline CheckResult check_pd_invariance(std::uint64_t seed, int runs) {
  using namespace verify_detail;
  return timed(3, "PD invariance (persistent / non-persistent)", [&] {
    std::mt19937_64 rng(seed);
    const auto strategies = rejecting_strategies();
    long steps = 0;
    long violations = 0;
    int errors = 0;
    double smallest = std::numeric_limits<double>::infinity();
    std::string first_error;
    for (int i = 0; i < runs; ++i) {
      const Scenario sc = i % 2 == 0 ? Scenario::sparse : Scenario::bpsk;
      const LinearProblem p = scenario_problem(sc, rng);
      const Strategy &s = strategies[static_cast<std::size_t>(i / 2) % strategies.size()];
      auto observer = [&](const EpState &, const EpState &after, const StepTrace &) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(after.belief_cov, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        smallest = std::min(smallest, lo);
        if (!(lo > 0.0)) {
          ++violations;
        }
        ++steps;
      };
      try {
        run(p, s, {}, observer);
      } catch (const Error &e) {
        ++errors;
        if (first_error.empty()) {
          first_error = s.name() + ": " + e.what();
        }
      }
    }
    CheckResult r;
    r.passed = violations == 0 && errors == 0;
    r.detail = std::to_string(runs) + " runs, " + std::to_string(steps) + " steps, violations = " +
               std::to_string(violations) + ", errors = " + std::to_string(errors) +
               ", smallest eigenvalue seen = " + sci(smallest) + (first_error.empty() ? "" : " (" + first_error + ")");
    return r;
  });
}

/// ACreVAMP keeps every prior message precision non-negative and every extrinsic variance positive.
inline CheckResult check_acrevamp_invariant(std::uint64_t seed, int runs) {
  using namespace verify_detail;
  return timed(4, "ACreVAMP invariant", [&] {
    std::mt19937_64 rng(seed);
    long steps = 0;
    long violations = 0;
    std::string first;
    const Strategy ac{StrategyKind::acrevamp, CheckMode::strict};
    for (int i = 0; i < runs; ++i) {
      const Scenario sc = i % 2 == 0 ? Scenario::sparse : Scenario::bpsk;
      const LinearProblem p = scenario_problem(sc, rng);
      auto observer = [&](const EpState &, const EpState &after, const StepTrace &tr) {
        ++steps;
        const bool xi_ok = after.xi_p.minCoeff() >= 0.0;
        const bool tau_ok = tr.extrinsic && tr.extrinsic->var > 0.0;
        if (!xi_ok || !tau_ok) {
          ++violations;
        }
      };
      try {
        run(p, ac, {}, observer);
      } catch (const Error &e) {
        ++violations;
        if (first.empty()) {
          first = e.what();
        }
      }
    }
    CheckResult r;
    r.passed = violations == 0;
    r.detail = std::to_string(runs) + " runs over both scenarios, " + std::to_string(steps) +
               " steps, violations = " + std::to_string(violations) + (first.empty() ? "" : " (" + first + ")");
    return r;
  });
}

/// Extrinsics from the belief marginals agree with the leave-one-out form.
inline CheckResult check_extrinsic_equivalence(std::uint64_t seed, int draws) {
  using namespace verify_detail;
  return timed(5, "Extrinsic formula equivalence", [&] {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
      const Eigen::Index rows = std::uniform_int_distribution<Eigen::Index>(1, 12)(rng);
      const Eigen::Index cols = std::uniform_int_distribution<Eigen::Index>(1, 10)(rng);
      LinearProblem p;
      p.a = gaussian_matrix(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
      p.y = gaussian_matrix(rows, 1, 1.0, rng).col(0);
      p.noise_var = log_unif(rng, 1e-3, 1.0);
      p.priors.assign(static_cast<std::size_t>(cols), MixturePrior::gaussian(0.0, 1.0));
      Eigen::VectorXd xi(cols);
      Eigen::VectorXd nu(cols);
      for (Eigen::Index j = 0; j < cols; ++j) {
        xi(j) = log_unif(rng, 1e-2, 1e2);
        nu(j) = unif(rng, -2.0, 2.0) * xi(j);
      }
      const GaussianND belief = compute_belief(p, nu, xi);
      const auto [mu_r, tau_r] = compute_extrinsics(belief, nu, xi);
      for (Eigen::Index j = 0; j < cols; ++j) {
        const Gaussian1D loo = extrinsic_leave_one_out(p, nu, xi, j);
        const double dv = std::abs(tau_r(j) - loo.var) / std::abs(loo.var);
        const double dm = std::abs(mu_r(j) - loo.mean) / std::max(std::abs(loo.mean), std::sqrt(std::abs(loo.var)));
        worst = std::max({worst, dv, dm});
      }
    }
    CheckResult r;
    r.passed = worst < 1e-8;
    r.detail = std::to_string(draws) + " random problems, max relative deviation = " + sci(worst) +
               " (means relative to max(|mu_r|, sqrt(tau_r)))";
    return r;
  });
}

/// The incrementally maintained belief equals a full recompute after every applied step.
inline CheckResult check_rank_one_consistency(std::uint64_t seed, int steps) {
  using namespace verify_detail;
  return timed(6, "Rank-one vs full recompute", [&] {
    std::mt19937_64 rng(seed);
    double worst_cov = 0.0;
    double worst_mean = 0.0;
    long applied = 0;
    const std::array<std::pair<Scenario, Strategy>, 4> cases{{
        {Scenario::sparse, {StrategyKind::acrevamp, CheckMode::strict}},
        {Scenario::sparse, {StrategyKind::nonpersistent, CheckMode::strict}},
        {Scenario::bpsk, {StrategyKind::acrevamp, CheckMode::strict}},
        {Scenario::bpsk, {StrategyKind::persistent, CheckMode::strict}},
    }};
    for (const auto &[sc, strategy] : cases) {
      const LinearProblem p = scenario_problem(sc, rng);
      EpState state = init_state(p);
      for (int t = 0; t < steps; ++t) {
        const Eigen::Index n = t % p.cols();
        const StepOutcome o = step(state, p, n, strategy);
        if (o.decision == Decision::rejected) {
          continue;
        }
        ++applied;
        const Eigen::MatrixXd cov = lu_covariance(precision_of(p, state.xi_p));
        const Eigen::VectorXd mean = cov * (p.a.transpose() * p.y / p.noise_var + state.nu_p);
        worst_cov = std::max(worst_cov, rel_frobenius(state.belief_cov, cov));
        worst_mean = std::max(worst_mean, (state.belief_mean - mean).norm() / std::max(mean.norm(), 1e-300));
      }
    }
    CheckResult r;
    r.passed = worst_cov < 1e-8 && worst_mean < 1e-8 && applied > 0;
    r.detail = "4 runs of " + std::to_string(steps) + " steps, " + std::to_string(applied) +
               " applied updates, max relative Frobenius error = " + sci(worst_cov) +
               ", max relative mean error = " + sci(worst_mean);
    return r;
  });
}

/// Brute-force MMSE against scalar quadrature (N = 1) and against LMMSE (Gaussian priors).
inline CheckResult check_oracles(std::uint64_t seed, int scalar_draws, int gaussian_draws) {
  using namespace verify_detail;
  return timed(7, "Oracle cross-check", [&] {
    std::mt19937_64 rng(seed);
    double worst_scalar = 0.0;
    for (int i = 0; i < scalar_draws; ++i) {
      const Eigen::Index rows = std::uniform_int_distribution<Eigen::Index>(1, 4)(rng);
      const MixturePrior prior = i % 5 == 0 ? bpsk_prior() : random_mixture(rng, 3);
      const LinearProblem p = random_problem(rows, {prior}, log_unif(rng, 1e-2, 1.0), rng);
      const OracleEstimate bf = brute_force_mmse(p);
      // y = a x + v is the pseudo-observation (a^T y / |a|^2, s2 / |a|^2) of x.
      const double aa = p.a.col(0).squaredNorm();
      const Gaussian1D q = quadrature_moments(prior, {p.a.col(0).dot(p.y) / aa, p.noise_var / aa});
      const double scale = std::max(1.0, std::abs(q.mean));
      worst_scalar = std::max({worst_scalar, std::abs(bf.mean(0) - q.mean) / scale,
                               std::abs(bf.cov(0, 0) - q.var) / std::max(1.0, q.var)});
    }
    double worst_gauss = 0.0;
    for (int i = 0; i < gaussian_draws; ++i) {
      const LinearProblem p = random_gaussian_problem(8, 10, rng);
      const OracleEstimate bf = brute_force_mmse(p);
      const OracleEstimate lin = lmmse(p);
      worst_gauss = std::max({worst_gauss, (bf.mean - lin.mean).cwiseAbs().maxCoeff(),
                              (bf.cov - lin.cov).cwiseAbs().maxCoeff()});
    }
    CheckResult r;
    r.passed = worst_scalar < 1e-8 && worst_gauss < 1e-10;
    r.detail = std::to_string(scalar_draws) + " scalar draws, max deviation from quadrature = " + sci(worst_scalar) +
               "; " + std::to_string(gaussian_draws) + " Gaussian 8x10 draws, max deviation from LMMSE = " +
               sci(worst_gauss);
    return r;
  });
}

/// Strict persistent and strict non-persistent estimates on converged instances.
inline CheckResult check_stationary_agreement(const ExperimentResult &sparse) {
  using namespace verify_detail;
  return timed(8, "Strict persistent vs strict non-persistent agreement", [&] {
    const std::string ps = "persistent-strict";
    const std::string nps = "nonpersistent-strict";
    double worst_x = 0.0;
    int compared = 0;
    int disagreeing = 0;
    for (std::size_t i = 0; i < sparse.records.size(); ++i) {
      const RunRecord &a = sparse.records[i];
      if (a.strategy != ps || a.failed || !a.converged) {
        continue;
      }
      for (const RunRecord &b : sparse.records) {
        if (b.strategy == nps && b.snr_db == a.snr_db && b.instance_id == a.instance_id && !b.failed &&
            b.converged) {
          const double rel = (a.x_hat - b.x_hat).norm() / std::max(b.x_hat.norm(), 1e-300);
          worst_x = std::max(worst_x, rel);
          ++compared;
          if (!(rel <= 1e-4)) {
            ++disagreeing;
          }
        }
      }
    }
    double worst_curve = 0.0;
    for (const NmseRow &row : sparse.report.rows) {
      if (row.strategy != ps) {
        continue;
      }
      const NmseRow *other = sparse.report.find(row.snr_db, nps);
      if (other == nullptr) {
        continue;
      }
      const double hi = std::max(row.nmse, other->nmse);
      worst_curve = std::max(worst_curve, hi > 0.0 ? std::abs(row.nmse - other->nmse) / hi : 0.0);
    }
    CheckResult r;
    r.passed = compared > 0 && disagreeing == 0 && worst_curve <= 0.05;
    r.detail = std::to_string(compared) + " instances converged under both, " + std::to_string(disagreeing) +
               " differ by more than 1e-4 (max relative difference " + sci(worst_x) +
               "); max relative NMSE gap = " + sci(worst_curve);
    return r;
  });
}

/// Qualitative ordering of the NMSE curves.
inline CheckResult check_qualitative(const ExperimentResult &sparse, const ExperimentResult &bpsk,
                                     double harness_seconds) {
  using namespace verify_detail;
  return timed(9, "Qualitative NMSE ordering", [&] {
    std::ostringstream why;
    bool ok_a = true;
    bool ok_b = true;
    for (const NmseRow &row : sparse.report.rows) {
      if (row.snr_db < 30.0 || row.strategy == kLmmseBaseline) {
        continue;
      }
      const NmseRow *lin = sparse.report.find(row.snr_db, kLmmseBaseline);
      if (row.n_instances == 0) {
        why << " [" << row.strategy << " @" << row.snr_db << " dB: no completed runs]";
        continue;
      }
      if (lin == nullptr || !(row.nmse < lin->nmse)) {
        ok_a = false;
        why << " [sparse " << row.strategy << " @" << row.snr_db << " dB: " << sci(row.nmse)
            << " vs lmmse " << (lin ? sci(lin->nmse) : "n/a") << "]";
      }
    }
    const std::array<std::string, 4> rivals{"persistent-strict", "persistent-relaxed", "nonpersistent-strict",
                                            "nonpersistent-relaxed"};
    for (const NmseRow &row : bpsk.report.rows) {
      if (row.snr_db > 10.0 || row.strategy != "acrevamp") {
        continue;
      }
      for (const std::string &name : rivals) {
        const NmseRow *other = bpsk.report.find(row.snr_db, name);
        if (other == nullptr || !(row.nmse <= other->nmse)) {
          ok_b = false;
          why << " [bpsk acrevamp @" << row.snr_db << " dB: " << sci(row.nmse) << " vs " << name << " "
              << (other ? sci(other->nmse) : "n/a") << "]";
        }
      }
    }
    const bool ok_time = harness_seconds < 600.0;
    CheckResult r;
    r.passed = ok_a && ok_b && ok_time;
    r.detail = std::string("(a) EP below LMMSE at >= 30 dB: ") + (ok_a ? "yes" : "no") +
               "; (b) ACreVAMP lowest at <= 10 dB on BPSK: " + (ok_b ? "yes" : "no") +
               "; harness time = " + sci(harness_seconds) + " s" + why.str();
    return r;
  });
}

/// For clamped candidates the constrained objective falls monotonically as xi_p -> 0.
inline CheckResult check_kld_monotonicity(std::uint64_t seed, int candidates) {
  using namespace verify_detail;
  return timed(10, "Constrained-KLD monotonicity", [&] {
    std::mt19937_64 rng(seed);
    int found = 0;
    int counterexamples = 0;
    double worst_nu = 0.0;
    std::vector<double> grid;
    for (int k = 0; k <= 90; ++k) {
      grid.push_back(std::pow(10.0, 3.0 - 0.1 * k)); // 1e3 down to 1e-6
    }
    for (int attempt = 0; attempt < 200000 && found < candidates; ++attempt) {
      MixturePrior prior = bpsk_prior();
      const int kind = attempt % 3;
      if (kind == 1) {
        prior = sparse_prior(std::uniform_int_distribution<int>(1, 10)(rng));
      } else if (kind == 2) {
        prior = random_mixture(rng, 3);
      }
      double lo = *std::min_element(prior.means().begin(), prior.means().end());
      double hi = *std::max_element(prior.means().begin(), prior.means().end());
      const double spread = std::max(hi - lo, std::sqrt(prior.max_var()));
      const Gaussian1D ext{unif(rng, lo, hi), spread * spread * log_unif(rng, 1e-4, 1.0)};
      const Gaussian1D tilted = quadrature_moments(prior, ext);
      const double xi_r = 1.0 / ext.var;
      const double xi_hat = 1.0 / tilted.var - xi_r;
      if (xi_hat > 0.0) {
        continue;
      }
      ++found;
      // L(mu_p, tau_p) = ln(tau_c)/2 + (tilted_var + (tilted_mean - mu_c)^2) / (2 tau_c), where
      // N(mu_c, tau_c) is N(mu_r, tau_r) N(mu_p, tau_p) and mu_p is chosen so mu_c matches the tilted mean.
      double prev = std::numeric_limits<double>::infinity();
      double mu_p_xi = 0.0;
      for (double xi_p : grid) {
        const double tau_p = 1.0 / xi_p;
        const double mu_p = (tilted.mean * (tau_p + ext.var) - tau_p * ext.mean) / ext.var;
        const double tau_c = tau_p * ext.var / (tau_p + ext.var);
        const double mu_c = (tau_p * ext.mean + ext.var * mu_p) / (tau_p + ext.var);
        const double l = 0.5 * std::log(tau_c) + (tilted.var + (tilted.mean - mu_c) * (tilted.mean - mu_c)) / (2.0 * tau_c);
        const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(l));
        if (l > prev + slack) {
          ++counterexamples;
          break;
        }
        prev = l;
        mu_p_xi = mu_p * xi_p;
      }
      // the clamped message reported by the strategy is the xi_p -> 0 limit
      CandidateUpdate c;
      c.xi_hat = xi_hat;
      c.nu_hat = tilted.mean / tilted.var - ext.mean / ext.var;
      c.tilted_mean = tilted.mean;
      c.tilted_var = tilted.var;
      c.extrinsic = ext;
      const Resolution res = acrevamp_decide(c);
      const double scale = std::max(std::abs(res.message.nu), std::abs(tilted.mean) * grid.back() + 1e-300);
      worst_nu = std::max(worst_nu, std::abs(res.message.nu - mu_p_xi) / scale);
      if (res.message.xi != 0.0 || res.outcome.decision != Decision::modified) {
        ++counterexamples;
      }
    }
    CheckResult r;
    r.passed = found == candidates && counterexamples == 0 && worst_nu < 1e-4;
    r.detail = std::to_string(found) + " clamped candidates, " + std::to_string(grid.size()) +
               "-point log grid on xi_p in [1e-6, 1e3], counterexamples = " + std::to_string(counterexamples) +
               ", clamped nu vs grid limit max relative gap = " + sci(worst_nu);
    return r;
  });
}

/// Identical seeds with different thread counts give byte-identical summaries.
inline CheckResult check_determinism(const ExperimentConfig &config, unsigned threads_a, unsigned threads_b) {
  using namespace verify_detail;
  return timed(11, "Determinism across thread counts", [&] {
    std::ostringstream a;
    std::ostringstream b;
    write_summary_csv(run_experiment(config, threads_a).report, a);
    write_summary_csv(run_experiment(config, threads_b).report, b);
    CheckResult r;
    r.passed = a.str() == b.str() && !a.str().empty();
    r.detail = "summary.csv with " + std::to_string(threads_a) + " vs " + std::to_string(threads_b) +
               " threads: " + (r.passed ? "identical" : "different") + " (" + std::to_string(a.str().size()) +
               " bytes)";
    return r;
  });
}

inline ExperimentConfig scenario_config(Scenario sc, int instances, std::uint64_t seed) {
  ExperimentConfig c;
  c.scenario = sc;
  c.m = sc == Scenario::bpsk ? 20 : 8;
  c.n = 10;
  c.instances_per_snr = instances;
  c.master_seed = seed;
  return c;
}

/// Runs every check and reports each through `report` as soon as it finishes.
inline std::vector<CheckResult> run_all_checks(std::uint64_t seed, const VerifyScale &scale,
                                               const std::function<void(const CheckResult &)> &report = {}) {
  std::vector<CheckResult> out;
  auto add = [&](CheckResult r) {
    if (report) {
      report(r);
    }
    out.push_back(std::move(r));
  };
  add(check_gaussian_exactness(seed + 1, scale.gaussian_instances));
  add(check_determinant_ratio(seed + 2, scale.determinant_runs));
  add(check_pd_invariance(seed + 3, scale.pd_runs));
  add(check_acrevamp_invariant(seed + 4, scale.acrevamp_runs));
  add(check_extrinsic_equivalence(seed + 5, scale.extrinsic_draws));
  add(check_rank_one_consistency(seed + 6, scale.rank_one_steps));
  add(check_oracles(seed + 7, scale.oracle_scalar_draws, scale.oracle_gaussian_draws));

  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult sparse =
      run_experiment(scenario_config(Scenario::sparse, scale.experiment_instances, seed + 8), scale.threads);
  add(check_stationary_agreement(sparse));
  if (scale.qualitative) {
    const ExperimentResult bpsk =
        run_experiment(scenario_config(Scenario::bpsk, scale.experiment_instances, seed + 9), scale.threads);
    const double harness_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    add(check_qualitative(sparse, bpsk, harness_seconds));
  }

  add(check_kld_monotonicity(seed + 10, scale.kld_candidates));
  ExperimentConfig small = scenario_config(Scenario::sparse, 3, seed + 11);
  small.snr_grid_db = {0.0, 20.0, 40.0};
  add(check_determinism(small, 1, 4));
  return out;
}

inline std::string format_check(const CheckResult &r) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail;
  return os.str();
}

} // namespace revamp::harness

#endif // REVAMP_HARNESS_VERIFY_HPP

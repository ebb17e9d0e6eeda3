#ifndef REVAMP_ENGINE_HPP
#define REVAMP_ENGINE_HPP

// Sequential EP on y = A x + v with per-symbol priors.
//
// The messages from the prior factors to the likelihood factor are kept in
// natural parameters (nu_p, xi_p) for every strategy. The likelihood-factor
// belief N(mu, C) with C = (A^T A / s2 + Diag(xi_p))^-1 and
// mu = C (A^T y / s2 + nu_p) is maintained by rank-one updates; one symbol is
// revisited per step in round-robin order.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "revamp/errors.hpp"
#include "revamp/gaussian.hpp"
#include "revamp/priors.hpp"
#include "revamp/problem.hpp"
#include "revamp/strategies.hpp"

namespace revamp {

struct EpState {
  Eigen::VectorXd nu_p;
  Eigen::VectorXd xi_p;
  Eigen::MatrixXd belief_cov;
  Eigen::VectorXd belief_mean;
  Eigen::VectorXd mu_r;  ///< last extrinsic mean computed per symbol
  Eigen::VectorXd tau_r; ///< last extrinsic variance computed per symbol
  int sweep = 0;
  std::int64_t t = 0;
};

struct EstimateReport {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd per_symbol_var;
  int sweeps_run = 0;
  bool converged = false;
  int rejected_updates = 0;
  int modified_updates = 0;
  EpState final_state;
};

/// Belief of the likelihood factor from the prior messages. Entries of xi_p may
/// be zero or negative as long as the total precision stays positive definite.
inline GaussianND compute_belief(const LinearProblem &problem, const Eigen::VectorXd &nu_p,
                                 const Eigen::VectorXd &xi_p) {
  if (nu_p.size() != problem.cols() || xi_p.size() != problem.cols()) {
    throw InvalidParameterError("compute_belief: message vectors must have length N");
  }
  Eigen::MatrixXd precision = problem.likelihood_precision();
  precision.diagonal() += xi_p;
  GaussianND out;
  out.cov = spd_inverse<ImproperBeliefError>(precision, "compute_belief: belief precision");
  out.mean = out.cov * (problem.likelihood_information() + nu_p);
  return out;
}

inline EpState init_state(const LinearProblem &problem) {
  problem.validate();
  const Eigen::Index n = problem.cols();
  EpState s;
  s.nu_p.resize(n);
  s.xi_p.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const PriorMoments pm = prior_moments(problem.priors[static_cast<std::size_t>(i)]);
    if (!(pm.var > 0.0)) {
      throw InvalidParameterError("init_state: prior variance must be positive");
    }
    s.xi_p(i) = 1.0 / pm.var;
    s.nu_p(i) = pm.mean * s.xi_p(i);
  }
  GaussianND b = compute_belief(problem, s.nu_p, s.xi_p);
  s.belief_cov = std::move(b.cov);
  s.belief_mean = std::move(b.mean);
  s.mu_r = Eigen::VectorXd::Zero(n);
  s.tau_r = Eigen::VectorXd::Zero(n);
  return s;
}

namespace detail {

inline Gaussian1D extrinsic_from_marginal(double marg_mean, double marg_var, double nu, double xi,
                                          Eigen::Index n) {
  const double xi_r = 1.0 / marg_var - xi;
  if (xi_r == 0.0) {
    throw SingularExtrinsicError("extrinsic precision cancels exactly at symbol " + std::to_string(n));
  }
  const double tau_r = 1.0 / xi_r;
  return {tau_r * (marg_mean / marg_var - nu), tau_r};
}

} // namespace detail

/// Extrinsic (cavity) pairs for every symbol: tau_r = (1/tau_x - xi_p)^-1,
/// mu_r = tau_r (mu_x/tau_x - nu_p). Negative tau_r is returned as-is.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_extrinsics(const GaussianND &belief,
                                                                     const Eigen::VectorXd &nu_p,
                                                                     const Eigen::VectorXd &xi_p) {
  const Eigen::Index n = belief.mean.size();
  Eigen::VectorXd mu_r(n);
  Eigen::VectorXd tau_r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Gaussian1D e = detail::extrinsic_from_marginal(belief.mean(i), belief.cov(i, i), nu_p(i), xi_p(i), i);
    mu_r(i) = e.mean;
    tau_r(i) = e.var;
  }
  return {std::move(mu_r), std::move(tau_r)};
}

/// The extrinsic of symbol n computed from the remaining messages alone:
///   tau_r = [a_n^T (C_v + A_{-n} C_p A_{-n}^T)^-1 a_n]^-1
///   mu_r  = tau_r a_n^T (C_v + A_{-n} C_p A_{-n}^T)^-1 (y - A_{-n} mu_p)
/// When some other message has xi <= 0 (no moment form), the extrinsic is the
/// marginal of the belief whose precision has entry n zeroed.
inline Gaussian1D extrinsic_leave_one_out(const LinearProblem &problem, const Eigen::VectorXd &nu_p,
                                          const Eigen::VectorXd &xi_p, Eigen::Index n) {
  const Eigen::Index cols = problem.cols();
  const Eigen::Index rows = problem.rows();
  if (n < 0 || n >= cols) {
    throw InvalidParameterError("extrinsic_leave_one_out: index out of range");
  }
  bool moment_form = true;
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (j != n && !(xi_p(j) > 0.0)) {
      moment_form = false;
    }
  }

  if (moment_form) {
    Eigen::MatrixXd s = problem.noise_var * Eigen::MatrixXd::Identity(rows, rows);
    Eigen::VectorXd resid = problem.y;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (j == n) {
        continue;
      }
      const double tau_p = 1.0 / xi_p(j);
      const double mu_p = nu_p(j) / xi_p(j);
      s.noalias() += tau_p * problem.a.col(j) * problem.a.col(j).transpose();
      resid -= mu_p * problem.a.col(j);
    }
    const auto llt = detail::factor_spd<InvalidParameterError>(s, "extrinsic_leave_one_out");
    const Eigen::VectorXd s_inv_a = llt.solve(problem.a.col(n));
    const double tau_r = 1.0 / problem.a.col(n).dot(s_inv_a);
    return {tau_r * s_inv_a.dot(resid), tau_r};
  }

  Eigen::VectorXd nu = nu_p;
  Eigen::VectorXd xi = xi_p;
  nu(n) = 0.0;
  xi(n) = 0.0;
  const GaussianND loo = compute_belief(problem, nu, xi);
  return {loo.mean(n), loo.cov(n, n)};
}

/// Current extrinsic of symbol n from the maintained belief.
inline Gaussian1D extrinsic_at(const EpState &state, Eigen::Index n) {
  return detail::extrinsic_from_marginal(state.belief_mean(n), state.belief_cov(n, n), state.nu_p(n),
                                         state.xi_p(n), n);
}

/// Moment-matched candidate for symbol n. Throws ImproperBeliefError when the
/// tilted belief is not integrable.
inline CandidateUpdate propose_update(const LinearProblem &problem, Eigen::Index n, const Gaussian1D &extrinsic) {
  const Gaussian1D tilted = posterior_moments(problem.priors[static_cast<std::size_t>(n)], extrinsic);
  CandidateUpdate c;
  c.n = n;
  c.extrinsic = extrinsic;
  c.tilted_mean = tilted.mean;
  c.tilted_var = tilted.var;
  c.xi_hat = 1.0 / tilted.var - 1.0 / extrinsic.var;
  c.nu_hat = tilted.mean / tilted.var - extrinsic.mean / extrinsic.var;
  return c;
}

inline CandidateUpdate propose_update(const EpState &state, const LinearProblem &problem, Eigen::Index n) {
  return propose_update(problem, n, extrinsic_at(state, n));
}

/// Installs message (nu, xi) at symbol n. The covariance is updated with the
/// rank-one formula C - C[:,n] (1/dxi + C_nn)^-1 C[:,n]^T; the mean is
/// recomputed from the information vector.
inline void apply_update(EpState &state, const LinearProblem &problem, Eigen::Index n,
                         const GaussianNatural1D &msg) {
  const double dxi = msg.xi - state.xi_p(n);
  if (dxi != 0.0) {
    const double denom = 1.0 / dxi + state.belief_cov(n, n);
    state.belief_cov = rank_one_downdate(state.belief_cov, n, denom);
  }
  state.xi_p(n) = msg.xi;
  state.nu_p(n) = msg.nu;
  state.belief_mean = state.belief_cov * (problem.likelihood_information() + state.nu_p);
}

/// Tentatively applies a candidate and reports every symbol's extrinsic precision.
/// The tentative state is returned so an accepted candidate need not be recomputed.
inline std::pair<LookAhead, std::optional<Eigen::MatrixXd>> look_ahead(const EpState &state,
                                                                      const CandidateUpdate &c) {
  LookAhead view;
  const Eigen::Index n = c.n;
  const double dxi = c.xi_hat - state.xi_p(n);
  const double gain = 1.0 + dxi * state.belief_cov(n, n);
  if (!(gain > 0.0)) {
    view.tentative_pd = false;
    return {view, std::nullopt};
  }
  Eigen::MatrixXd cov = dxi == 0.0 ? state.belief_cov
                                   : rank_one_downdate(state.belief_cov, n, 1.0 / dxi + state.belief_cov(n, n));
  const Eigen::Index dim = cov.rows();
  view.extrinsic_precision.resize(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double xi = j == n ? c.xi_hat : state.xi_p(j);
    view.extrinsic_precision[static_cast<std::size_t>(j)] = 1.0 / cov(j, j) - xi;
  }
  return {std::move(view), std::move(cov)};
}

/// Everything an observer may want to know about one step.
struct StepTrace {
  Eigen::Index n = 0;
  std::optional<Gaussian1D> extrinsic;
  std::optional<CandidateUpdate> candidate;
  GaussianNatural1D applied;
  StepOutcome outcome;
};

/// One sequential update of symbol n under the given strategy.
inline StepOutcome step(EpState &state, const LinearProblem &problem, Eigen::Index n, const Strategy &strategy,
                        StepTrace *trace = nullptr) {
  StepTrace local;
  StepTrace &tr = trace != nullptr ? *trace : local;
  tr = StepTrace{};
  tr.n = n;
  const MixturePrior &prior = problem.priors[static_cast<std::size_t>(n)];

  auto finish = [&](StepOutcome o) {
    ++state.t;
    tr.outcome = o;
    return o;
  };

  Gaussian1D ext;
  try {
    ext = extrinsic_at(state, n);
  } catch (const SingularExtrinsicError &e) {
    return finish({Decision::rejected, e.what()});
  }
  state.mu_r(n) = ext.mean;
  state.tau_r(n) = ext.var;
  tr.extrinsic = ext;

  if (strategy.kind == StrategyKind::persistent) {
    StepOutcome pre = persistent_decide(ext, strategy.mode, prior);
    if (pre.decision == Decision::rejected) {
      return finish(std::move(pre));
    }
  }
  if (strategy.kind == StrategyKind::acrevamp && !(ext.var > 0.0)) {
    throw InternalInvariantError("acrevamp: extrinsic variance " + std::to_string(ext.var) +
                                 " is not positive at symbol " + std::to_string(n));
  }

  const CandidateUpdate cand = propose_update(problem, n, ext);
  tr.candidate = cand;

  Resolution res;
  std::optional<Eigen::MatrixXd> tentative_cov;
  switch (strategy.kind) {
  case StrategyKind::ideal:
  case StrategyKind::persistent:
    res = ideal_decide(cand);
    break;
  case StrategyKind::clip:
    res = clipping_decide(cand);
    break;
  case StrategyKind::acrevamp:
    res = acrevamp_decide(cand);
    break;
  case StrategyKind::nonpersistent: {
    auto [view, cov] = look_ahead(state, cand);
    res = nonpersistent_decide(cand, strategy.mode, view, problem.priors);
    tentative_cov = std::move(cov);
    break;
  }
  }

  if (res.outcome.decision == Decision::rejected) {
    return finish(std::move(res.outcome));
  }
  if (tentative_cov) {
    state.belief_cov = std::move(*tentative_cov);
    state.xi_p(n) = res.message.xi;
    state.nu_p(n) = res.message.nu;
    state.belief_mean = state.belief_cov * (problem.likelihood_information() + state.nu_p);
  } else {
    apply_update(state, problem, n, res.message);
  }
  tr.applied = res.message;
  return finish(std::move(res.outcome));
}

struct RunOptions {
  int max_sweeps = 200;
  double tol = 1e-8;
};

/// Called after every step with the state before and after it.
using StepObserver = std::function<void(const EpState &before, const EpState &after, const StepTrace &)>;

/// Round-robin sweeps until the belief mean moves less than tol over a full
/// sweep, or max_sweeps is reached. Non-convergence is reported, not thrown.
inline EstimateReport run(const LinearProblem &problem, const Strategy &strategy, const RunOptions &opts = {},
                          const StepObserver &observer = {}) {
  EpState state = init_state(problem);
  const Eigen::Index n_sym = problem.cols();
  EstimateReport report;
  StepTrace trace;
  EpState before;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    state.sweep = sweep;
    const Eigen::VectorXd start_mean = state.belief_mean;
    for (Eigen::Index n = 0; n < n_sym; ++n) {
      if (observer) {
        before = state;
      }
      const StepOutcome o = step(state, problem, n, strategy, &trace);
      if (o.decision == Decision::rejected) {
        ++report.rejected_updates;
      } else if (o.decision == Decision::modified) {
        ++report.modified_updates;
      }
      if (observer) {
        observer(before, state, trace);
      }
    }
    report.sweeps_run = sweep;
    if ((state.belief_mean - start_mean).cwiseAbs().maxCoeff() < opts.tol) {
      report.converged = true;
      break;
    }
  }
  report.x_hat = state.belief_mean;
  report.per_symbol_var = state.belief_cov.diagonal();
  report.final_state = std::move(state);
  return report;
}

} // namespace revamp

#endif // REVAMP_ENGINE_HPP

#ifndef REVAMP_ORACLES_HPP
#define REVAMP_ORACLES_HPP

// Reference estimators for small problems. These share nothing with the EP
// engine except the Gaussian reproduction primitive.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "revamp/errors.hpp"
#include "revamp/gaussian.hpp"
#include "revamp/priors.hpp"
#include "revamp/problem.hpp"

namespace revamp {

struct OracleEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double log_evidence = 0.0;
};

inline constexpr std::uint64_t kMaxAssignments = std::uint64_t{1} << 20;

namespace detail {

// Calls visit(index, log_weight, reproduction) for every component assignment
// with non-zero prior weight; the first symbol's component varies fastest.
// log_weight = log prior weight of the assignment + log evidence.
template <typename Visit>
void enumerate_assignments(const LinearProblem &problem, Visit &&visit) {
  problem.validate();
  const std::size_t n = problem.priors.size();
  std::uint64_t total = 1;
  for (const MixturePrior &p : problem.priors) {
    total *= p.size();
    if (total > kMaxAssignments) {
      throw TooLargeError("brute-force MMSE: more than 2^20 component assignments");
    }
  }
  const auto m = problem.rows();
  const Eigen::MatrixXd noise_cov = problem.noise_var * Eigen::MatrixXd::Identity(m, m);
  std::vector<std::size_t> digit(n, 0);
  GaussianND component{Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n)};
  for (std::uint64_t a = 0; a < total; ++a) {
    double log_prior = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const MixturePrior &p = problem.priors[i];
      const auto ii = static_cast<Eigen::Index>(i);
      log_prior += std::log(p.weights()[digit[i]]);
      component.mean(ii) = p.means()[digit[i]];
      component.cov(ii, ii) = p.vars()[digit[i]];
    }
    if (std::isfinite(log_prior)) {
      const Reproduction r = reproduce(component, problem.a, problem.y, noise_cov);
      visit(a, log_prior + r.log_evidence, r);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (++digit[i] < problem.priors[i].size()) {
        break;
      }
      digit[i] = 0;
    }
  }
}

} // namespace detail

/// Exact MMSE by enumerating every mixture-component assignment. Each
/// assignment is a Gaussian prior; its posterior and evidence come from
/// reproduce, and the assignments are merged with log-space weights.
inline OracleEstimate brute_force_mmse(const LinearProblem &problem) {
  const auto n = problem.cols();
  OracleEstimate out;
  out.mean = Eigen::VectorXd::Zero(n);
  out.cov = Eigen::MatrixXd::Zero(n, n);
  double log_total = -std::numeric_limits<double>::infinity();
  detail::enumerate_assignments(problem, [&](std::uint64_t, double lw, const Reproduction &r) {
    const double hi = std::max(log_total, lw);
    const double new_total = hi + std::log(std::exp(log_total - hi) + std::exp(lw - hi));
    // share of the running mass carried by this assignment
    const double alpha = std::exp(lw - new_total);
    const Eigen::VectorXd d = r.posterior.mean - out.mean;
    out.cov = (1.0 - alpha) * out.cov + alpha * r.posterior.cov + alpha * (1.0 - alpha) * d * d.transpose();
    out.mean += alpha * d;
    log_total = new_total;
  });
  symmetrize(out.cov);
  out.log_evidence = log_total;
  return out;
}

/// Normalised posterior weight of every component assignment, in enumeration order.
inline std::vector<double> brute_force_assignment_weights(const LinearProblem &problem) {
  std::vector<double> w;
  detail::enumerate_assignments(problem, [&](std::uint64_t a, double lw, const Reproduction &) {
    w.resize(a + 1, -std::numeric_limits<double>::infinity());
    w[a] = lw;
  });
  const double hi = *std::max_element(w.begin(), w.end());
  double sum = 0.0;
  for (double &v : w) {
    v = std::exp(v - hi);
    sum += v;
  }
  for (double &v : w) {
    v /= sum;
  }
  return w;
}

/// Linear MMSE: every prior replaced by a Gaussian with its mean and variance.
inline OracleEstimate lmmse(const LinearProblem &problem) {
  problem.validate();
  const auto n = problem.cols();
  const auto m = problem.rows();
  GaussianND prior{Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const PriorMoments pm = prior_moments(problem.priors[static_cast<std::size_t>(i)]);
    prior.mean(i) = pm.mean;
    prior.cov(i, i) = pm.var;
  }
  const Reproduction r =
      reproduce(prior, problem.a, problem.y, problem.noise_var * Eigen::MatrixXd::Identity(m, m));
  return {r.posterior.mean, r.posterior.cov, r.log_evidence};
}

} // namespace revamp

#endif // REVAMP_ORACLES_HPP

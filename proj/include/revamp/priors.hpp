#ifndef REVAMP_PRIORS_HPP
#define REVAMP_PRIORS_HPP

// Per-symbol Gaussian-mixture priors p(x_n) and the moments of the tilted
// belief p(x) * exp(-(x - mu_r)^2 / (2 tau_r)), where tau_r may be negative.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "revamp/errors.hpp"
#include "revamp/gaussian.hpp"

namespace revamp {

class MixturePrior {
public:
  MixturePrior(std::vector<double> weights, std::vector<double> means, std::vector<double> vars)
      : weights_(std::move(weights)), means_(std::move(means)), vars_(std::move(vars)) {
    if (weights_.empty() || weights_.size() != means_.size() || weights_.size() != vars_.size()) {
      throw InvalidParameterError("MixturePrior: weights, means and vars must be non-empty and equally sized");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (!(weights_[k] >= 0.0) || !std::isfinite(weights_[k])) {
        throw InvalidParameterError("MixturePrior: weights must be finite and non-negative");
      }
      if (!(vars_[k] > 0.0) || !std::isfinite(vars_[k]) || !std::isfinite(means_[k])) {
        throw InvalidParameterError("MixturePrior: component variances must be finite and positive");
      }
      total += weights_[k];
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw InvalidParameterError("MixturePrior: weights must sum to one");
    }
  }

  static MixturePrior gaussian(double mean, double var) { return MixturePrior({1.0}, {mean}, {var}); }

  [[nodiscard]] std::size_t size() const { return weights_.size(); }
  [[nodiscard]] const std::vector<double> &weights() const { return weights_; }
  [[nodiscard]] const std::vector<double> &means() const { return means_; }
  [[nodiscard]] const std::vector<double> &vars() const { return vars_; }

  /// Largest variance among components with non-zero weight.
  [[nodiscard]] double max_var() const {
    double v = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
      if (weights_[k] > 0.0) {
        v = std::max(v, vars_[k]);
      }
    }
    return v;
  }

private:
  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<double> vars_;
};

/// Symbol n (1-based) of the exponentially decaying sparse prior:
/// 0.5 N(-3.2^(1-n), 0.1 * 3.2^(2-2n)) + 0.5 N(+3.2^(1-n), 0.1 * 3.2^(2-2n)).
inline MixturePrior sparse_prior(int n) {
  if (n < 1) {
    throw InvalidParameterError("sparse_prior: symbol index is 1-based");
  }
  const double amp = std::pow(3.2, 1.0 - n);
  const double var = 0.1 * amp * amp;
  return MixturePrior({0.5, 0.5}, {-amp, amp}, {var, var});
}

/// BPSK approximated by narrow Gaussians: 0.5 N(-1, 0.01) + 0.5 N(1, 0.01).
inline MixturePrior bpsk_prior() { return MixturePrior({0.5, 0.5}, {-1.0, 1.0}, {0.01, 0.01}); }

struct PriorMoments {
  double mean = 0.0;
  double var = 0.0;
};

inline PriorMoments prior_moments(const MixturePrior &prior) {
  double mean = 0.0;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    mean += prior.weights()[k] * prior.means()[k];
  }
  double var = 0.0;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    const double d = prior.means()[k] - mean;
    var += prior.weights()[k] * (prior.vars()[k] + d * d);
  }
  return {mean, var};
}

/// Integrability of p(x) UN(x | ., 1/xi_r) given the pseudo-observation precision
/// xi_r = 1/tau_r: every weighted component must keep positive combined precision.
/// xi_r == 0 (flat pseudo-observation) leaves the prior itself, which is proper.
inline bool is_belief_proper_precision(const MixturePrior &prior, double xi_r) {
  if (!std::isfinite(xi_r)) {
    return false;
  }
  for (std::size_t k = 0; k < prior.size(); ++k) {
    if (prior.weights()[k] > 0.0 && !(1.0 / prior.vars()[k] + xi_r > 0.0)) {
      return false;
    }
  }
  return true;
}

inline bool is_belief_proper(const MixturePrior &prior, const Gaussian1D &pseudo_obs) {
  if (pseudo_obs.var == 0.0 || !std::isfinite(pseudo_obs.mean) || std::isnan(pseudo_obs.var)) {
    return false;
  }
  return is_belief_proper_precision(prior, 1.0 / pseudo_obs.var);
}

/// Per-component posterior and responsibilities of the tilted belief.
struct TiltedMixture {
  std::vector<double> responsibilities;
  std::vector<double> means;
  std::vector<double> vars;
};

/// Closed-form decomposition of p(x) UN(x | mu_r, tau_r) into its weighted
/// Gaussian components. Component evidence is carried in log-space using the
/// signed-precision form, so s_k + tau_r may be negative.
inline TiltedMixture tilted_mixture(const MixturePrior &prior, const Gaussian1D &pseudo_obs) {
  if (!is_belief_proper(prior, pseudo_obs)) {
    throw ImproperBeliefError("posterior_moments: tilted belief is not integrable");
  }
  const double xi_r = 1.0 / pseudo_obs.var;
  const std::size_t k_count = prior.size();
  TiltedMixture out;
  out.responsibilities.assign(k_count, 0.0);
  out.means.assign(k_count, 0.0);
  out.vars.assign(k_count, 0.0);

  std::vector<double> log_w(k_count, -std::numeric_limits<double>::infinity());
  double log_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    const double s = prior.vars()[k];
    const double m = prior.means()[k];
    const double shrink = 1.0 + s * xi_r; // s_k * (1/s_k + xi_r) > 0 when proper
    out.vars[k] = s / shrink;
    out.means[k] = (m + s * xi_r * pseudo_obs.mean) / shrink;
    if (prior.weights()[k] > 0.0) {
      const double d = pseudo_obs.mean - m;
      log_w[k] = std::log(prior.weights()[k]) - 0.5 * std::log(shrink) - 0.5 * d * d * xi_r / shrink;
      log_max = std::max(log_max, log_w[k]);
    }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    out.responsibilities[k] = std::exp(log_w[k] - log_max);
    total += out.responsibilities[k];
  }
  for (double &r : out.responsibilities) {
    r /= total;
  }
  return out;
}

/// Mean and variance of the tilted belief p(x) UN(x | mu_r, tau_r).
inline Gaussian1D posterior_moments(const MixturePrior &prior, const Gaussian1D &pseudo_obs) {
  const TiltedMixture mix = tilted_mixture(prior, pseudo_obs);
  double mean = 0.0;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    mean += mix.responsibilities[k] * mix.means[k];
  }
  double var = 0.0;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    const double d = mix.means[k] - mean;
    var += mix.responsibilities[k] * (mix.vars[k] + d * d);
  }
  return {mean, var};
}

} // namespace revamp

#endif // REVAMP_PRIORS_HPP

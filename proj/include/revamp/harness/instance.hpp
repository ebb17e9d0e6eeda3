#ifndef REVAMP_HARNESS_INSTANCE_HPP
#define REVAMP_HARNESS_INSTANCE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "revamp/harness/config.hpp"
#include "revamp/priors.hpp"
#include "revamp/problem.hpp"

namespace revamp::harness {

struct Instance {
  LinearProblem problem;
  Eigen::VectorXd true_x;
};

/// Noise variance for which E||Ax||^2 / (M s2) equals the target SNR, with
/// [A]_mn ~ N(0, 1/N) so that E||Ax||^2 = (M/N) sum_n E[x_n^2].
inline double noise_var_for_snr(const std::vector<MixturePrior> &priors, double snr_db) {
  double second_moment = 0.0;
  for (const MixturePrior &p : priors) {
    const PriorMoments pm = prior_moments(p);
    second_moment += pm.var + pm.mean * pm.mean;
  }
  const double per_row_power = second_moment / static_cast<double>(priors.size());
  return per_row_power / std::pow(10.0, snr_db / 10.0);
}

/// Independent generator per (master seed, SNR index, instance id).
inline std::mt19937_64 instance_rng(std::uint64_t master_seed, std::size_t snr_index, int instance_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(snr_index), static_cast<std::uint32_t>(instance_id),
                    0x5eedu};
  return std::mt19937_64(seq);
}

inline double sample_mixture(const MixturePrior &p, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double u = unif(rng);
  std::size_t k = 0;
  double cum = p.weights()[0];
  while (u >= cum && k + 1 < p.size()) {
    ++k;
    cum += p.weights()[k];
  }
  return p.means()[k] + std::sqrt(p.vars()[k]) * normal(rng);
}

/// Draws A, x and v in that order; y = A x + v.
inline Instance generate_instance(const ExperimentConfig &config, std::size_t snr_index, int instance_id) {
  const double snr_db = config.snr_grid_db.at(snr_index);
  std::mt19937_64 rng = instance_rng(config.master_seed, snr_index, instance_id);
  std::normal_distribution<double> normal(0.0, 1.0);

  Instance inst;
  LinearProblem &p = inst.problem;
  p.priors = config.priors();
  p.noise_var = noise_var_for_snr(p.priors, snr_db);

  const double a_sd = 1.0 / std::sqrt(static_cast<double>(config.n));
  p.a.resize(config.m, config.n);
  for (int r = 0; r < config.m; ++r) {
    for (int c = 0; c < config.n; ++c) {
      p.a(r, c) = a_sd * normal(rng);
    }
  }
  inst.true_x.resize(config.n);
  for (int c = 0; c < config.n; ++c) {
    inst.true_x(c) = sample_mixture(p.priors[static_cast<std::size_t>(c)], rng);
  }
  const double noise_sd = std::sqrt(p.noise_var);
  p.y = p.a * inst.true_x;
  for (int r = 0; r < config.m; ++r) {
    p.y(r) += noise_sd * normal(rng);
  }
  return inst;
}

} // namespace revamp::harness

#endif // REVAMP_HARNESS_INSTANCE_HPP

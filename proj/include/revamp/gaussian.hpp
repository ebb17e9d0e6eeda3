#ifndef REVAMP_GAUSSIAN_HPP
#define REVAMP_GAUSSIAN_HPP

// Scalar and small dense Gaussian algebra.
//
// Scalar messages live in two parameterisations: moment form (mean, var) and
// natural form (nu = mean/var, xi = 1/var). Only the natural form can hold an
// infinite variance (xi == 0); both may hold a negative variance, which is how
// improper (non-integrable) Gaussian-shaped messages appear.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "revamp/errors.hpp"

namespace revamp {

struct Gaussian1D {
  double mean = 0.0;
  double var = 1.0;
};

struct GaussianNatural1D {
  double nu = 0.0;
  double xi = 1.0;
};

struct GaussianND {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

enum class Combine : int { product = +1, quotient = -1 };

inline GaussianNatural1D to_natural(const Gaussian1D &g) {
  if (g.var == 0.0 || !std::isfinite(g.var) || !std::isfinite(g.mean)) {
    throw InvalidParameterError("to_natural: variance must be finite and non-zero");
  }
  return {g.mean / g.var, 1.0 / g.var};
}

inline Gaussian1D to_moment(const GaussianNatural1D &g) {
  if (g.xi == 0.0 || !std::isfinite(g.xi) || !std::isfinite(g.nu)) {
    throw InvalidParameterError("to_moment: precision must be finite and non-zero");
  }
  return {g.nu / g.xi, 1.0 / g.xi};
}

/// Product (adds natural parameters) or quotient (subtracts them). The result may be improper.
inline GaussianNatural1D natural_combine(const GaussianNatural1D &a, const GaussianNatural1D &b,
                                         Combine sign) {
  const double s = static_cast<double>(static_cast<int>(sign));
  return {a.nu + s * b.nu, a.xi + s * b.xi};
}

/// (C + C^T) / 2, in place.
inline void symmetrize(Eigen::MatrixXd &c) {
  c = (0.5 * (c + c.transpose())).eval();
}

inline bool is_symmetric(const Eigen::MatrixXd &c, double rel_tol = 1e-12) {
  if (c.rows() != c.cols()) {
    return false;
  }
  const double scale = std::max(c.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  return (c - c.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

namespace detail {

// Cholesky factor of a symmetric PD matrix; no jitter. Throws Err when the
// factorisation breaks down.
template <typename Err>
Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd &m, const std::string &what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Err(what + ": matrix is not positive definite");
  }
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  if (!(diag.array() > 0.0).all() || !diag.allFinite()) {
    throw Err(what + ": matrix is not positive definite");
  }
  return llt;
}

inline double log_det(const Eigen::LLT<Eigen::MatrixXd> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

} // namespace detail

/// Inverse of a symmetric positive-definite matrix via Cholesky; symmetric output.
template <typename Err = InvalidParameterError>
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd &m, const std::string &what = "spd_inverse") {
  const auto llt = detail::factor_spd<Err>(m, what);
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  symmetrize(inv);
  return inv;
}

struct Reproduction {
  double log_evidence = 0.0; ///< log N(obs_mean | A prior.mean, A prior.cov A^T + obs_cov)
  GaussianND posterior;
};

/// Multivariate Gaussian reproduction:
///   N(x | m1, C1) N(Ax | m2, C2) = N(m2 | A m1, A C1 A^T + C2) N(x | m3, C3)
/// with C3 = (C1^-1 + A^T C2^-1 A)^-1 and m3 = C3 (C1^-1 m1 + A^T C2^-1 m2).
inline Reproduction reproduce(const GaussianND &prior, const Eigen::MatrixXd &a,
                              const Eigen::VectorXd &obs_mean, const Eigen::MatrixXd &obs_cov) {
  const Eigen::Index n = prior.mean.size();
  const Eigen::Index m = obs_mean.size();
  if (prior.cov.rows() != n || prior.cov.cols() != n || a.rows() != m || a.cols() != n ||
      obs_cov.rows() != m || obs_cov.cols() != m) {
    throw InvalidParameterError("reproduce: inconsistent dimensions");
  }
  if (!is_symmetric(prior.cov) || !is_symmetric(obs_cov)) {
    throw InvalidParameterError("reproduce: covariance is not symmetric");
  }
  const auto prior_llt = detail::factor_spd<InvalidParameterError>(prior.cov, "reproduce: prior covariance");
  const auto obs_llt = detail::factor_spd<InvalidParameterError>(obs_cov, "reproduce: observation covariance");

  const Eigen::MatrixXd obs_prec_a = obs_llt.solve(a);
  Eigen::MatrixXd precision = prior_llt.solve(Eigen::MatrixXd::Identity(n, n));
  precision.noalias() += a.transpose() * obs_prec_a;
  symmetrize(precision);

  Reproduction out;
  out.posterior.cov = spd_inverse(precision, "reproduce: posterior precision");
  const Eigen::VectorXd info = prior_llt.solve(prior.mean) + obs_prec_a.transpose() * obs_mean;
  out.posterior.mean = out.posterior.cov * info;

  Eigen::MatrixXd marginal = a * prior.cov * a.transpose() + obs_cov;
  symmetrize(marginal);
  const auto marg_llt = detail::factor_spd<InvalidParameterError>(marginal, "reproduce: evidence covariance");
  const Eigen::VectorXd resid = obs_mean - a * prior.mean;
  const double maha = resid.dot(marg_llt.solve(resid));
  out.log_evidence = -0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) +
                             detail::log_det(marg_llt) + maha);
  return out;
}

/// C - C[:,n] C[:,n]^T / denominator, symmetrised. An infinite denominator is the
/// no-op update (a zero change in precision).
inline Eigen::MatrixXd rank_one_downdate(const Eigen::MatrixXd &c, Eigen::Index n,
                                         double denominator) {
  if (n < 0 || n >= c.cols()) {
    throw InvalidParameterError("rank_one_downdate: index out of range");
  }
  if (std::isinf(denominator)) {
    return c;
  }
  if (denominator == 0.0 || std::isnan(denominator)) {
    throw SingularUpdateError("rank_one_downdate: zero denominator");
  }
  const Eigen::VectorXd col = c.col(n);
  Eigen::MatrixXd out = c;
  out.noalias() -= (col / denominator) * col.transpose();
  symmetrize(out);
  return out;
}

} // namespace revamp

#endif // REVAMP_GAUSSIAN_HPP

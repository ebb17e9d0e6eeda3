#ifndef REVAMP_PROBLEM_HPP
#define REVAMP_PROBLEM_HPP

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "revamp/errors.hpp"
#include "revamp/priors.hpp"

namespace revamp {

/// y = A x + v with v ~ N(0, noise_var I) and independent x_n ~ priors[n].
struct LinearProblem {
  Eigen::MatrixXd a;
  Eigen::VectorXd y;
  double noise_var = 1.0;
  std::vector<MixturePrior> priors;

  [[nodiscard]] Eigen::Index rows() const { return a.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return a.cols(); }

  void validate() const {
    if (a.rows() < 1 || a.cols() < 1) {
      throw InvalidParameterError("LinearProblem: A must be non-empty");
    }
    if (y.size() != a.rows()) {
      throw InvalidParameterError("LinearProblem: y length must equal the number of rows of A");
    }
    if (static_cast<Eigen::Index>(priors.size()) != a.cols()) {
      throw InvalidParameterError("LinearProblem: one prior per column of A is required");
    }
    if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
      throw InvalidParameterError("LinearProblem: noise variance must be finite and positive");
    }
    if (!a.allFinite() || !y.allFinite()) {
      throw InvalidParameterError("LinearProblem: A and y must be finite");
    }
  }

  /// A^T A / noise_var
  [[nodiscard]] Eigen::MatrixXd likelihood_precision() const {
    Eigen::MatrixXd p = (a.transpose() * a) / noise_var;
    return (0.5 * (p + p.transpose())).eval();
  }

  /// A^T y / noise_var
  [[nodiscard]] Eigen::VectorXd likelihood_information() const { return a.transpose() * y / noise_var; }
};

} // namespace revamp

#endif // REVAMP_PROBLEM_HPP

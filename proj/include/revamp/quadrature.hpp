#ifndef REVAMP_QUADRATURE_HPP
#define REVAMP_QUADRATURE_HPP

// Numerical moments of the tilted belief p(x) UN(x | mu_r, tau_r).
//
// This is the reference path for scalar moments and deliberately does not call
// into the closed-form mixture code in priors.hpp: it only evaluates the
// integrand pointwise and integrates it with adaptive Gauss-Kronrod.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "revamp/errors.hpp"
#include "revamp/gaussian.hpp"
#include "revamp/priors.hpp"

namespace revamp {

struct QuadratureOptions {
  double sigma_span = 8.0;    ///< half-width of each component window, in effective std devs
  double rel_tol = 1e-10;     ///< per-panel Gauss-Kronrod tolerance (tighter sits below roundoff)
  unsigned max_depth = 15;
};

namespace detail {

class TiltedIntegrand {
public:
  TiltedIntegrand(const MixturePrior &prior, const Gaussian1D &obs) : prior_(prior), obs_(obs) {
    xi_r_ = 1.0 / obs.var;
  }

  [[nodiscard]] double log_value(double x) const {
    double best = -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    // streaming log-sum-exp over components
    for (std::size_t k = 0; k < prior_.size(); ++k) {
      const double w = prior_.weights()[k];
      if (w <= 0.0) {
        continue;
      }
      const double s = prior_.vars()[k];
      const double d = x - prior_.means()[k];
      const double lt = std::log(w) - 0.5 * std::log(2.0 * std::numbers::pi * s) - 0.5 * d * d / s;
      if (lt > best) {
        acc = acc * std::exp(best - lt) + 1.0;
        best = lt;
      } else {
        acc += std::exp(lt - best);
      }
    }
    const double e = x - obs_.mean;
    return best + std::log(acc) - 0.5 * e * e * xi_r_;
  }

  [[nodiscard]] double xi_r() const { return xi_r_; }

private:
  const MixturePrior &prior_;
  Gaussian1D obs_;
  double xi_r_ = 0.0;
};

} // namespace detail

/// Mean and variance of p(x) UN(x | mu_r, tau_r) by adaptive quadrature over
/// +-sigma_span effective standard deviations of every component product.
inline Gaussian1D quadrature_moments(const MixturePrior &prior, const Gaussian1D &pseudo_obs,
                                     const QuadratureOptions &opts = {}) {
  if (pseudo_obs.var == 0.0 || std::isnan(pseudo_obs.var) || !std::isfinite(pseudo_obs.mean)) {
    throw ImproperBeliefError("quadrature_moments: degenerate pseudo-observation");
  }
  const detail::TiltedIntegrand f(prior, pseudo_obs);
  const double xi_r = f.xi_r();

  struct Window {
    double lo, hi;
  };
  std::vector<Window> windows;
  std::vector<double> breaks;
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < prior.size(); ++k) {
    if (prior.weights()[k] <= 0.0) {
      continue;
    }
    const double prec = 1.0 / prior.vars()[k] + xi_r;
    if (!(prec > 0.0)) {
      throw ImproperBeliefError("quadrature_moments: component product has non-positive precision");
    }
    const double centre = (prior.means()[k] / prior.vars()[k] + pseudo_obs.mean * xi_r) / prec;
    const double sd = 1.0 / std::sqrt(prec);
    windows.push_back({centre - opts.sigma_span * sd, centre + opts.sigma_span * sd});
    for (double j : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
      const double b = centre + j * sd * opts.sigma_span / 8.0;
      breaks.push_back(b);
    }
    shift = std::max(shift, f.log_value(centre));
  }

  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  auto covered = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    return std::any_of(windows.begin(), windows.end(),
                       [&](const Window &w) { return mid >= w.lo && mid <= w.hi; });
  };

  // Boost's tolerance is relative to each panel's own value, which never
  // terminates on panels whose values are subnormal. A coarse pass first
  // estimates every panel, then each panel's tolerance is loosened so that
  // its error budget is relative to the whole integral. Panels are mapped onto
  // [-1, 1] because the adaptive error test compares an unscaled error
  // estimate against a scaled tolerance, which stalls on narrow panels.
  auto on_unit = [](auto &g, double lo, double hi, unsigned depth, double tol) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    return half * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                      [&](double t) { return g(mid + half * t); }, -1.0, 1.0, depth, tol);
  };
  auto integrate = [&](auto &&g) {
    std::vector<std::pair<double, double>> panels;
    std::vector<double> coarse;
    double coarse_total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double lo = breaks[i];
      const double hi = breaks[i + 1];
      if (hi <= lo || !covered(lo, hi)) {
        continue;
      }
      panels.emplace_back(lo, hi);
      coarse.push_back(std::abs(on_unit(g, lo, hi, 0u, opts.rel_tol)));
      coarse_total += coarse.back();
    }
    double total = 0.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      if (coarse[i] == 0.0) {
        continue;
      }
      const double tol = opts.rel_tol * std::max(1.0, coarse_total / coarse[i]);
      total += on_unit(g, panels[i].first, panels[i].second, opts.max_depth, tol);
    }
    return total;
  };

  auto density = [&](double x) { return std::exp(f.log_value(x) - shift); };
  const double mass = integrate(density);
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ImproperBeliefError("quadrature_moments: integral vanished or diverged");
  }
  // Boost's stopping rule is relative to each panel's estimate, so a
  // sign-changing integrand near zero would recurse to max depth. Measuring x
  // from the left end of the support keeps every moment integrand non-negative.
  const double origin = breaks.front();
  const double mean = origin + integrate([&](double x) { return (x - origin) * density(x); }) / mass;
  const double var = integrate([&](double x) {
                       const double d = x - mean;
                       return d * d * density(x);
                     }) /
                     mass;
  return {mean, var};
}

} // namespace revamp

#endif // REVAMP_QUADRATURE_HPP

#ifndef REVAMP_STRATEGIES_HPP
#define REVAMP_STRATEGIES_HPP

// Handlers for prior-factor message updates whose precision would be
// non-positive (negative or infinite message variance).
//
//   ideal       apply the raw moment-matched update, whatever its sign
//   clip        non-positive precision -> flat message (nu, xi) = (0, 0)
//   persistent  apply only if the current tilted belief is proper (strict)
//               or the current extrinsic variance is positive (relaxed)
//   nonpersistent
//               apply only if, after a tentative update, every tilted belief
//               would be proper (strict) or every extrinsic variance would be
//               positive (relaxed)
//   acrevamp    constrained projection: non-positive precision clamps to 0
//               with the mean-matching nu

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "revamp/errors.hpp"
#include "revamp/gaussian.hpp"
#include "revamp/priors.hpp"

namespace revamp {

enum class StrategyKind { ideal, clip, persistent, nonpersistent, acrevamp };
enum class CheckMode { strict, relaxed };

struct Strategy {
  StrategyKind kind = StrategyKind::acrevamp;
  CheckMode mode = CheckMode::strict;

  [[nodiscard]] std::string name() const {
    switch (kind) {
    case StrategyKind::ideal:
      return "ideal";
    case StrategyKind::clip:
      return "clip";
    case StrategyKind::persistent:
      return mode == CheckMode::strict ? "persistent-strict" : "persistent-relaxed";
    case StrategyKind::nonpersistent:
      return mode == CheckMode::strict ? "nonpersistent-strict" : "nonpersistent-relaxed";
    case StrategyKind::acrevamp:
      return "acrevamp";
    }
    return "unknown";
  }

  /// Parses one of: ideal | clip | persistent-strict | persistent-relaxed |
  /// nonpersistent-strict | nonpersistent-relaxed | acrevamp.
  static Strategy parse(std::string_view name) {
    for (const Strategy &s : all()) {
      if (s.name() == name) {
        return s;
      }
    }
    throw InvalidParameterError("unknown strategy '" + std::string(name) + "'");
  }

  static std::array<Strategy, 7> all() {
    return {{{StrategyKind::ideal, CheckMode::strict},
             {StrategyKind::clip, CheckMode::strict},
             {StrategyKind::persistent, CheckMode::strict},
             {StrategyKind::persistent, CheckMode::relaxed},
             {StrategyKind::nonpersistent, CheckMode::strict},
             {StrategyKind::nonpersistent, CheckMode::relaxed},
             {StrategyKind::acrevamp, CheckMode::strict}}};
  }

  friend bool operator==(const Strategy &, const Strategy &) = default;
};

enum class Decision { accepted, rejected, modified };

inline const char *to_string(Decision d) {
  switch (d) {
  case Decision::accepted:
    return "accepted";
  case Decision::rejected:
    return "rejected";
  case Decision::modified:
    return "modified";
  }
  return "?";
}

struct StepOutcome {
  Decision decision = Decision::accepted;
  std::string reason;
};

/// Moment-matched message update for symbol n, in natural parameters.
struct CandidateUpdate {
  Eigen::Index n = 0;
  double xi_hat = 0.0;      ///< 1/tilted_var - 1/extrinsic.var
  double nu_hat = 0.0;      ///< tilted_mean/tilted_var - extrinsic.mean/extrinsic.var
  double tilted_mean = 0.0;
  double tilted_var = 0.0;
  Gaussian1D extrinsic;
};

/// A decision together with the message to install when it is not a rejection.
struct Resolution {
  StepOutcome outcome;
  GaussianNatural1D message;
};

inline Resolution ideal_decide(const CandidateUpdate &c) {
  return {{Decision::accepted, ""}, {c.nu_hat, c.xi_hat}};
}

inline Resolution clipping_decide(const CandidateUpdate &c) {
  if (c.xi_hat > 0.0) {
    return {{Decision::accepted, ""}, {c.nu_hat, c.xi_hat}};
  }
  return {{Decision::modified, "non-positive precision reset to flat message"}, {0.0, 0.0}};
}

/// Consulted before the tilted moments are evaluated; only the current
/// extrinsic of the selected symbol matters.
inline StepOutcome persistent_decide(const Gaussian1D &extrinsic, CheckMode mode,
                                     const MixturePrior &prior) {
  if (mode == CheckMode::strict) {
    if (is_belief_proper(prior, extrinsic)) {
      return {Decision::accepted, ""};
    }
    return {Decision::rejected, "tilted belief is not integrable"};
  }
  if (extrinsic.var > 0.0) {
    return {Decision::accepted, ""};
  }
  return {Decision::rejected, "extrinsic variance is not positive"};
}

/// Extrinsic precisions every symbol would see after tentatively applying a candidate.
struct LookAhead {
  bool tentative_pd = true;
  std::vector<double> extrinsic_precision; ///< xi_r_n = 1/tau_r_n for every n
};

inline Resolution nonpersistent_decide(const CandidateUpdate &c, CheckMode mode, const LookAhead &view,
                                       const std::vector<MixturePrior> &priors) {
  const GaussianNatural1D msg{c.nu_hat, c.xi_hat};
  if (!view.tentative_pd) {
    return {{Decision::rejected, "tentative belief precision is not positive definite"}, msg};
  }
  for (std::size_t n = 0; n < view.extrinsic_precision.size(); ++n) {
    const double xi_r = view.extrinsic_precision[n];
    const bool ok = mode == CheckMode::strict ? is_belief_proper_precision(priors[n], xi_r) : xi_r > 0.0;
    if (!ok) {
      return {{Decision::rejected, mode == CheckMode::strict
                                       ? "look-ahead tilted belief is not integrable at symbol " + std::to_string(n)
                                       : "look-ahead extrinsic variance is not positive at symbol " + std::to_string(n)},
              msg};
    }
  }
  return {{Decision::accepted, ""}, msg};
}

/// Constrained moment matching with xi_p >= 0. The clamped branch uses the
/// current extrinsic: nu_p = (tilted_mean - mu_r) / tau_r.
inline Resolution acrevamp_decide(const CandidateUpdate &c) {
  if (!(c.extrinsic.var > 0.0)) {
    throw InternalInvariantError("acrevamp: extrinsic variance must be positive");
  }
  if (c.xi_hat > 0.0) {
    return {{Decision::accepted, ""}, {c.nu_hat, c.xi_hat}};
  }
  return {{Decision::modified, "non-positive precision clamped to zero"},
          {(c.tilted_mean - c.extrinsic.mean) / c.extrinsic.var, 0.0}};
}

} // namespace revamp

#endif // REVAMP_STRATEGIES_HPP

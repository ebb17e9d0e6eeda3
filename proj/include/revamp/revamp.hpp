#ifndef REVAMP_REVAMP_HPP
#define REVAMP_REVAMP_HPP

#include "revamp/engine.hpp"
#include "revamp/errors.hpp"
#include "revamp/gaussian.hpp"
#include "revamp/oracles.hpp"
#include "revamp/priors.hpp"
#include "revamp/problem.hpp"
#include "revamp/quadrature.hpp"
#include "revamp/strategies.hpp"

#endif // REVAMP_REVAMP_HPP

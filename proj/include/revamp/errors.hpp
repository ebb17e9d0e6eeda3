#ifndef REVAMP_ERRORS_HPP
#define REVAMP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace revamp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A parameter is outside the domain of the operation (zero variance, non-PD input, bad dims).
class InvalidParameterError : public Error {
public:
  using Error::Error;
};

/// A belief that must integrate to one does not (non-integrable tilted product or non-PD precision).
class ImproperBeliefError : public Error {
public:
  using Error::Error;
};

/// Rank-one covariance update with a zero denominator.
class SingularUpdateError : public Error {
public:
  using Error::Error;
};

/// Extrinsic precision cancels exactly (infinite extrinsic variance).
class SingularExtrinsicError : public Error {
public:
  using Error::Error;
};

/// Brute-force enumeration would exceed the assignment budget.
class TooLargeError : public Error {
public:
  using Error::Error;
};

/// An algorithmic invariant was violated; indicates a bug rather than bad input.
class InternalInvariantError : public Error {
public:
  using Error::Error;
};

} // namespace revamp

#endif // REVAMP_ERRORS_HPP

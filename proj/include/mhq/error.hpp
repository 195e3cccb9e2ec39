#pragma once

#include <stdexcept>
#include <string>

namespace mhq {

/// Base of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violates a documented invariant (bad point, shape mismatch, bad flag...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// log_p(q) requested for q on (or numerically at) the cut locus of p.
class CutLocusError : public Error {
 public:
  using Error::Error;
};

/// The optimizer could not make progress (e.g. line search exhausted).
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace mhq

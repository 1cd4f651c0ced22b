#pragma once

#include <stdexcept>
#include <string>

namespace frackap {

// Every numerical failure in the library derives from Error so front ends can
// map the whole family to a single exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Valid input that the library deliberately does not handle (mixed weight
// signatures, Laplace-only routines called in the Bessel setting, ...).
class UnsupportedCaseError : public Error {
 public:
  using Error::Error;
};

// Grids that cannot be combined.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Finite-difference step incompatible with the evaluation point.
class StepError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Every capacity column vanishes on the norm grid.
class DegenerateSetError : public Error {
 public:
  using Error::Error;
};

// An iterative or adaptive procedure failed to stabilise. Carries the two most
// recent estimates so the caller can judge how far off it was.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last, double previous)
      : Error(what + " (last=" + std::to_string(last) + ", previous=" + std::to_string(previous) + ")"),
        last_(last),
        previous_(previous) {}

  double last() const noexcept { return last_; }
  double previous() const noexcept { return previous_; }

 private:
  double last_;
  double previous_;
};

}  // namespace frackap

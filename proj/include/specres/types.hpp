#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace specres {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Base for everything this library throws.  Callers that only want a
// success/failure split can catch this one type.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input: bad dimensions, unknown ids, non-finite entries,
// schema violations.  The message carries the offending field/path.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// A computation that could not be completed reliably: solver
// non-convergence, ill-conditioned similarity, ambiguous eigenvalue
// clustering.  Never used to mask a dubious result -- if this is not
// thrown, the returned numbers are trustworthy at the stated tolerances.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

// Expression-text rejection, with the byte offset of the problem.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

// Runtime failure while evaluating a parsed expression (division by
// zero, sqrt of a negative, domain error in pow).
class EvalError : public Error {
public:
  explicit EvalError(const std::string& what) : Error(what) {}
};

}  // namespace specres

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace koopest {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The empirical mass matrix is too close to singular to be inverted.
class IllConditionedMass : public Error {
 public:
  explicit IllConditionedMass(double cond)
      : Error("mass matrix is ill-conditioned (cond = " + std::to_string(cond) + ")"),
        cond_(cond) {}
  double cond() const noexcept { return cond_; }

 private:
  double cond_;
};

class NonFiniteResult : public Error {
 public:
  using Error::Error;
};

/// Eigen-truncation requested on a matrix that is (numerically) defective.
class TruncationUnavailable : public Error {
 public:
  using Error::Error;
};

class GradientUnavailable : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number of the offending record.
class IngestError : public Error {
 public:
  IngestError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class AllPathsFailed : public Error {
 public:
  explicit AllPathsFailed(std::size_t n_fail)
      : Error("all " + std::to_string(n_fail) + " paths failed"), n_fail_(n_fail) {}
  std::size_t n_fail() const noexcept { return n_fail_; }

 private:
  std::size_t n_fail_;
};

}  // namespace koopest

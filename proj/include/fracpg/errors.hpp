#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>

namespace fracpg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A symbolic operation that would leave the admissible power-sum class.
/// Callers are expected to fall back to a numeric path.
class UnsupportedExponent : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Numerical breakdown: nonconvergence, singular pivots, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public NumericalError {
 public:
  SingularMatrix(std::size_t pivot, const std::string& what)
      : NumericalError(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Sherman-Morrison denominator 1 + v'T^{-1}u vanished.
class SolverBreakdown : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::set<std::string> expected, const std::string& what)
      : Error(what), offset_(offset), expected_(std::move(expected)) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::set<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::set<std::string> expected_;
};

}  // namespace fracpg

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes disagree (vector lengths, operator dimension, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (tolerances, sizes, grid spacing, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Zero pivot or pivot growth while factoring a banded matrix.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// The banded preconditioner could not be factored.
class PreconditionerError : public Error {
 public:
  using Error::Error;
};

/// Fewer probe pairs than unknowns in the row regression.
class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

/// A regressor row has (numerically) zero variance.
class ZeroVarianceError : public Error {
 public:
  using Error::Error;
};

/// Normal equations could not be factored even with ridge regularization.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

/// Back-substitution on the projected triangular system hit a zero pivot.
class SingularProjectionError : public Error {
 public:
  using Error::Error;
};

/// Matrix Market text could not be parsed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A well-formed Matrix Market file in a variant we do not read.
class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace psp

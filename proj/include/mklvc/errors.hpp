#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mklvc {

/// Bad input: shapes, ranges, malformed files. The CLI maps these to exit 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that could not produce a trustworthy result. CLI exit 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatchError : public ValidationError {
 public:
  DimensionMismatchError(const std::string& what, std::size_t expected,
                         std::size_t actual)
      : ValidationError(what + ": expected dimension " +
                        std::to_string(expected) + ", got " +
                        std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class InsufficientSamplesError : public ValidationError {
 public:
  InsufficientSamplesError(const std::string& what, std::size_t required,
                           std::size_t actual)
      : ValidationError(what + ": need at least " + std::to_string(required) +
                        " frames, got " + std::to_string(actual)),
        required_(required),
        actual_(actual) {}

  std::size_t required() const noexcept { return required_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t required_;
  std::size_t actual_;
};

class InvalidBlockDimError : public ValidationError {
 public:
  InvalidBlockDimError(std::size_t block_dim, std::size_t dim)
      : ValidationError("block dimension " + std::to_string(block_dim) +
                        " does not divide embedding dimension " +
                        std::to_string(dim)) {}
};

/// Malformed EMBF container. `offset` is the byte position where parsing failed.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : ValidationError(what + " (at byte offset " + std::to_string(offset) +
                        ")"),
        detail_(what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }
  /// Message without the offset suffix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t offset_;
};

class EigenSolverError : public NumericalError {
 public:
  explicit EigenSolverError(std::size_t dim)
      : NumericalError("symmetric eigensolver failed to converge on a " +
                       std::to_string(dim) + "x" + std::to_string(dim) +
                       " matrix"),
        dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
};

class NotPsdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Raised by factorized fitting when a block's source covariance is singular.
class SingularSourceCovarianceError : public SingularMatrixError {
 public:
  SingularSourceCovarianceError(std::size_t block, const std::string& detail)
      : SingularMatrixError("singular source covariance in block " +
                            std::to_string(block) + ": " + detail +
                            " (try a positive ridge)"),
        block_(block) {}

  std::size_t block() const noexcept { return block_; }

 private:
  std::size_t block_;
};

}  // namespace mklvc

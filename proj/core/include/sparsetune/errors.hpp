#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparsetune {

// Broad classes used by the CLI to pick an exit code.
enum class ErrorClass { config, io, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorClass::config, "dimension error: " + what) {}
};

class EnsembleError : public Error {
 public:
  explicit EnsembleError(const std::string& what) : Error(ErrorClass::config, "ensemble constraint: " + what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorClass::config, "domain error: " + what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::config, "configuration error: " + what) {}
};

/// The keep-count of an order-statistic threshold leaves nothing to cut.
class DegenerateThresholdError : public Error {
 public:
  DegenerateThresholdError(std::size_t keep, std::size_t length)
      : Error(ErrorClass::config, "degenerate threshold: keep-count " + std::to_string(keep) +
                                      " >= candidate length " + std::to_string(length)),
        keep_(keep) {}
  std::size_t keep_count() const noexcept { return keep_; }

 private:
  std::size_t keep_;
};

class OverdeterminedSupportError : public Error {
 public:
  OverdeterminedSupportError(std::size_t support, std::size_t rows)
      : Error(ErrorClass::numeric, "support of size " + std::to_string(support) + " exceeds " +
                                       std::to_string(rows) + " measurements"),
        support_(support) {}
  std::size_t support_size() const noexcept { return support_; }

 private:
  std::size_t support_;
};

class RankError : public Error {
 public:
  explicit RankError(std::size_t support, int iteration = 0)
      : Error(ErrorClass::numeric, "numerically singular submatrix on support of size " +
                                       std::to_string(support) +
                                       (iteration > 0 ? " at iteration " + std::to_string(iteration) : "")),
        support_(support),
        iteration_(iteration) {}
  std::size_t support_size() const noexcept { return support_; }
  int iteration() const noexcept { return iteration_; }

 private:
  std::size_t support_;
  int iteration_;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(int iteration)
      : Error(ErrorClass::numeric, "non-finite iterate at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

class UndefinedRatioError : public Error {
 public:
  UndefinedRatioError() : Error(ErrorClass::numeric, "relative error undefined: reference vector is zero") {}
};

class EstimateUndefinedError : public Error {
 public:
  explicit EstimateUndefinedError(double delta)
      : Error(ErrorClass::numeric, "transition estimate undefined at delta=" + std::to_string(delta) +
                                       ": success fractions never cross 1/2; widen the rho grid"),
        delta_(delta) {}
  double delta() const noexcept { return delta_; }

 private:
  double delta_;
};

class TuningFailedError : public Error {
 public:
  explicit TuningFailedError(double delta)
      : Error(ErrorClass::numeric, "tuning failed at delta=" + std::to_string(delta) +
                                       ": every parameter choice gave an undefined estimate") {}
};

class NormalizationError : public Error {
 public:
  NormalizationError(std::size_t column, double norm)
      : Error(ErrorClass::numeric, "matrix columns must have unit Euclidean norm; column " +
                                       std::to_string(column) + " has norm " + std::to_string(norm)),
        column_(column),
        norm_(norm) {}
  std::size_t column() const noexcept { return column_; }
  double norm() const noexcept { return norm_; }

 private:
  std::size_t column_;
  double norm_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorClass::io, "I/O error: " + what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(ErrorClass::io, source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sparsetune

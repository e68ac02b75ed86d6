#pragma once

// Shared numeric helpers and the error hierarchy used across the library.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ipwm {

/// Probabilities are kept inside [kProbFloor, 1 - kProbFloor] wherever a
/// logarithm or a reciprocal of a fitted probability is taken.
inline constexpr double kProbFloor = 1e-12;

inline double expit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double clamp_prob(double p) {
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

/// Bernoulli mass: p^x (1-p)^(1-x) for x in {0,1}.
inline double bern(double p, int x) { return x ? p : 1.0 - p; }

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or missing mandatory column/value.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Validated values inconsistent with their validation indicators.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Operation restricted to a single binary covariate was given something else.
class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise invalid numeric input.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Formula or design construction failure.
class FormulaError : public Error {
 public:
  using Error::Error;
};

class SingularDesignError : public Error {
 public:
  SingularDesignError(std::string column, std::size_t index)
      : Error("singular design: column '" + column + "' (index " +
              std::to_string(index) + ") is linearly dependent on earlier columns"),
        column_(std::move(column)),
        index_(index) {}

  const std::string& column() const noexcept { return column_; }
  std::size_t index() const noexcept { return index_; }

 private:
  std::string column_;
  std::size_t index_;
};

/// A conditional probability was requested for a cell with no mass.
class ConversionError : public Error {
 public:
  using Error::Error;
};

/// Weight denominator vanished or a required parameter is inestimable.
class DegenerateCellError : public Error {
 public:
  using Error::Error;
};

/// One exposure group of a weighted odds ratio carries no weight.
class DegenerateGroupError : public Error {
 public:
  using Error::Error;
};

class BootstrapDegenerateError : public Error {
 public:
  using Error::Error;
};

class PositivityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NonBracketingError : public Error {
 public:
  using Error::Error;
};

}  // namespace ipwm

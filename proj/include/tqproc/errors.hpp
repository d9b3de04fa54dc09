#pragma once

#include <stdexcept>
#include <string>

namespace tqproc {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failure (non-PSD covariance, negative embedding spectrum).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that cannot support the requested statistic.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace tqproc

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace twodsys {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or constraint-violating parameters.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent data (times, values, CSV contents).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (integration step, prior ranges, thresholds).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unstable system or noise intensity that is not positive semi-definite.
class InvalidSystem : public Error {
 public:
  using Error::Error;
};

class DegenerateSystem : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Cholesky failed at every jitter level of the policy.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, std::vector<double> attempted)
      : Error(what), attempted_jitter(std::move(attempted)) {}

  std::vector<double> attempted_jitter;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class FitFailure : public Error {
 public:
  FitFailure(const std::string& what, std::vector<std::string> restart_status)
      : Error(what), restarts(std::move(restart_status)) {}

  std::vector<std::string> restarts;
};

}  // namespace twodsys

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pfode {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// A batch of states, one column per sample (dim x n).
using Samples = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the admissible domain (negative time, bad sizes, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Evaluation at or too close to sigma = 0, where the PF-ODE is singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Non-finite state, budget exhaustion, failed convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration / interchange file. `path` points at the
// offending field, e.g. "config.eta.min".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace pfode

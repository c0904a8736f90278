#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace scenplan {

/// Bad argument, dimension mismatch or out-of-domain parameter.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The discretized thermal network is not asymptotically stable.
class ModelStabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An incremental schedule entry cannot be formed (empty beta_j sum).
class ScheduleDegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The QP solver hit its iteration cap. Carries the last iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd best_iterate)
      : std::runtime_error(what), best_iterate_(std::move(best_iterate)) {}

  const Eigen::VectorXd& best_iterate() const noexcept { return best_iterate_; }

 private:
  Eigen::VectorXd best_iterate_;
};

}  // namespace scenplan

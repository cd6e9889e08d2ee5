#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace quattro {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Sequences indexed by time step.
using StateTrajectory = std::vector<Vec>;
using ControlTrajectory = std::vector<Vec>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or wrongly sized input to a model or cost.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class LinearizationError : public Error {
 public:
  using Error::Error;
};

/// A rollout produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(int step, const std::string& what)
      : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Q_uu + mu*I failed a Cholesky factorization during the backward pass.
class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(int step, const std::string& what)
      : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Malformed weight or dataset file. The message names the offending field.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace quattro

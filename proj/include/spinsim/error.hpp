#pragma once

#include <stdexcept>
#include <string>

namespace spinsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or physically impossible configuration input.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Quaternion handed to an operation that requires unit norm.
class InvalidQuaternion : public Error {
 public:
  using Error::Error;
};

/// Model is well formed but cannot be used for the requested operation
/// (e.g. singular wheel inertia, singular coupling block).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure broke down (singular solve, NaN in derivatives).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Inverse kinematics could not close the grasp pose.
class NoSolutionError : public Error {
 public:
  NoSolutionError(const std::string& message, double residual)
      : Error(message), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The detumbling constraints cannot be met even with zero decay rate.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& message, std::string constraint)
      : Error(message), constraint_(std::move(constraint)) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

/// Mission-level failure such as Phase A not converging before its timeout.
class MissionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace spinsim

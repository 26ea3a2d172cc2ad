#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ttlnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented invariant (negative rate, non-stochastic vector, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation that needs at least one operand received none.
class ArityError : public Error {
 public:
  using Error::Error;
};

/// The generator is reducible, singular beyond rank one, or numerically unsolvable.
class NoStationaryDistribution : public Error {
 public:
  using Error::Error;
};

/// A transform or parameter lies outside the domain where it is finite.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The hypothesis psi(omega) < 1 of the R-policy transform does not hold.
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

/// The stopping time has infinite mean (the TTL never expires structurally).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A series did not converge within its iteration cap.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Topology document problem, carrying a JSON-path-like location.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A construction would exceed the configured state budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(std::string node, std::string stage, std::size_t dimension, std::size_t budget)
      : Error("state budget exceeded at node '" + node + "' (" + stage + "): needs " +
              std::to_string(dimension) + " states, budget is " + std::to_string(budget)),
        node_(std::move(node)),
        stage_(std::move(stage)),
        dimension_(dimension),
        budget_(budget) {}

  const std::string& node() const noexcept { return node_; }
  const std::string& stage() const noexcept { return stage_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  std::string node_;
  std::string stage_;
  std::size_t dimension_;
  std::size_t budget_;
};

}  // namespace ttlnet

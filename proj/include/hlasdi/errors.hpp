#pragma once

#include <stdexcept>
#include <string>

namespace hlasdi {

/// Moment matrix of a stencil request is singular (e.g. duplicate offsets).
struct DegenerateGridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A time series is too short for the requested derivative order.
struct InsufficientPointsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not match.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A latent state exceeded the divergence guard during integration.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& msg, long step)
      : std::runtime_error(msg + " (step " + std::to_string(step) + ")"),
        step_index(step) {}
  long step_index;
};

/// A gradient became non-finite; the epoch must be aborted.
struct NonFiniteGradientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A loss term became non-finite; carries the offending term name.
struct NonFiniteLossError : std::runtime_error {
  NonFiniteLossError(const std::string& term)
      : std::runtime_error("non-finite loss term: " + term), term_name(term) {}
  std::string term_name;
};

/// An explicit time step violates the stability bound of a solver.
struct StabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// GP kernel matrix cannot be factorized (conflicting duplicate inputs).
struct ConditioningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The reference trajectory has zero variance; relative error is undefined.
struct DegenerateTruthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or command line.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Missing or malformed dataset / checkpoint file.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hlasdi

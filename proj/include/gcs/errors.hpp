#pragma once

#include <stdexcept>

namespace gcs {

/// Invalid argument values, shapes, or ranges.
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Condition id absent from a generator spec.
struct UnknownConditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Latent vector outside the admissible ball.
struct OutOfBallError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Enumeration request beyond the configured size cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Class whose sampled secants are all zero, or an all-zero estimate.
struct DegenerateClassError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Weighted/unweighted mode paired with an incompatible draw mode or check.
struct ModeConflictError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// No certificate can be produced from the given report.
struct NoCertificateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Optimizer reached a non-finite objective.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gcs

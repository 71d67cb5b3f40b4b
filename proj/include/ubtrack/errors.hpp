#pragma once

#include <stdexcept>
#include <string>

namespace ubtrack {

// Error categories map onto CLI exit codes: data errors -> 2, numerical -> 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : DataError {
  using DataError::DataError;
};
struct DegenerateProjection : NumericalError {
  using NumericalError::NumericalError;
};
struct SingularCamera : NumericalError {
  using NumericalError::NumericalError;
};
struct SingularCovariance : NumericalError {
  using NumericalError::NumericalError;
};
struct SingularInnovation : NumericalError {
  using NumericalError::NumericalError;
};
struct NoVisibleJoints : DataError {
  using DataError::DataError;
};
struct AllWeightsZero : NumericalError {
  using NumericalError::NumericalError;
};
struct EmptyCluster : NumericalError {
  using NumericalError::NumericalError;
};
struct InsufficientData : DataError {
  using DataError::DataError;
};
struct ParseError : DataError {
  using DataError::DataError;
};
struct MissingJoint : DataError {
  using DataError::DataError;
};
struct LengthMismatch : DataError {
  using DataError::DataError;
};
struct ZeroLengthLimb : DataError {
  using DataError::DataError;
};
struct DegenerateConfiguration : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace ubtrack

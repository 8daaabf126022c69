#pragma once

#include <stdexcept>
#include <string>

namespace warpkit {

// Data / usage problems (bad files, bad inputs): CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : DataError {
  using DataError::DataError;
};

struct OutOfBounds : DataError {
  using DataError::DataError;
};

struct UnknownNode : DataError {
  using DataError::DataError;
};

struct UnknownTarget : DataError {
  using DataError::DataError;
};

struct UnknownHeuristicInput : DataError {
  using DataError::DataError;
};

struct EmptyBank : DataError {
  using DataError::DataError;
};

struct EmptyTracks : DataError {
  using DataError::DataError;
};

struct DegenerateContour : DataError {
  using DataError::DataError;
};

// Numerical failures: CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularSystem : NumericalError {
  using NumericalError::NumericalError;
};

struct DegenerateTriangulation : NumericalError {
  using NumericalError::NumericalError;
};

struct UnattainablePrecision : NumericalError {
  using NumericalError::NumericalError;
};

struct InsufficientData : NumericalError {
  using NumericalError::NumericalError;
};

struct DivergedFactorization : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace warpkit

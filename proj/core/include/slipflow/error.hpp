#pragma once

#include <stdexcept>
#include <string>

namespace slipflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid domain description (non-positive axes, degenerate profile, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

class PointOffSurfaceError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class NonTangentError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class BasisError : public Error {
 public:
  using Error::Error;
};

class OperatorError : public Error {
 public:
  using Error::Error;
};

/// Eigen-solver failure or a spectral contract violation.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Explicit time stepping produced energy growth or non-finite values.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// A diagnostic or verifier was asked for something it cannot decide.
class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace slipflow

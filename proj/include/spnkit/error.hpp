#pragma once

#include <stdexcept>
#include <string>

namespace spnkit {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A point to be projected has non-positive depth in the camera frame.
class PointBehindCamera : public Error {
 public:
  explicit PointBehindCamera(const std::string& what) : Error(what) {}
};

/// The damped normal matrix of a least-squares step could not be factorized.
class SingularNormalMatrix : public Error {
 public:
  explicit SingularNormalMatrix(const std::string& what) : Error(what) {}
};

/// A text file (model, camera, codebook, dataset, CSV) failed to parse.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

/// A caller violated a documented precondition (sizes, ranges, finiteness).
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(what) {}
};

}  // namespace spnkit

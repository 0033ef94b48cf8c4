#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ltc {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument, inconsistent shape, or violated precondition.
struct ParameterError : Error {
  using Error::Error;
};

// A denominator (or other critical expression) hit zero or crossed sign.
struct SingularityError : Error {
  std::size_t coordinate;
  SingularityError(const std::string& msg, std::size_t coord) : Error(msg), coordinate(coord) {}
};

// A state update produced a non-finite value.
struct OverflowError : Error {
  std::size_t coordinate;
  OverflowError(const std::string& msg, std::size_t coord) : Error(msg), coordinate(coord) {}
};

// Adaptive step size collapsed below the admissible minimum.
struct StiffnessError : Error {
  using Error::Error;
};

// Malformed input file.
struct ParseError : Error {
  using Error::Error;
};

// Requested columns/shapes do not match the file or checkpoint.
struct SchemaError : Error {
  using Error::Error;
};

// Checkpoint written by an unsupported format version.
struct VersionError : Error {
  using Error::Error;
};

}  // namespace ltc

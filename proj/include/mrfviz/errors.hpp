#ifndef MRFVIZ_ERRORS_HPP
#define MRFVIZ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mrfviz {

/// Base of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid physical or grid parameters (non-positive relaxation times, empty axes, ...).
struct DomainError : Error {
  using Error::Error;
};

/// Optimizer divergence, bisection failure, degenerate geometry.
struct NumericalError : Error {
  using Error::Error;
};

struct DegenerateGeometryError : NumericalError {
  using NumericalError::NumericalError;
};

/// Bad configuration keys/values, inconsistent hierarchy settings.
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

/// Malformed or corrupted file contents.
struct FormatError : IoError {
  using IoError::IoError;
};

} // namespace mrfviz

#endif

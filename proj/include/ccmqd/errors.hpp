#pragma once

#include <stdexcept>
#include <string>

namespace ccmqd {

/// Shapes or sizes that do not conform.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a trustworthy answer (non-convergence,
/// singular system, non-finite values).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular or ill-conditioned linear system. The Cayley step reacts to this by
/// halving its step size.
class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A matrix failed density-matrix, PSD, or channel validation.
class InvalidStateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad user configuration (file schema, parameter ranges).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ccmqd

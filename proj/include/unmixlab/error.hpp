#pragma once

#include <stdexcept>
#include <string>

namespace unmixlab {

// Root of the toolkit's exception hierarchy. The CLI maps the three
// families below onto exit codes 2, 3 and 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, recipe, or argument combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing/corrupt files, shape mismatches, invariant violations in data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses, divergence, ill-conditioned systems.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace unmixlab

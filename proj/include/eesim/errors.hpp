#pragma once

#include <stdexcept>
#include <string>

namespace eesim {

// Base of every error the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model graph: cycles, unknown nodes, unreachable output.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Input data that parses but breaks an invariant (trace records, report files).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied parameters outside their legal range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Operation asked to work on an empty or otherwise unusable domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Grid search refused because the lattice would exceed the configured cap.
class ExplosionCapError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace eesim

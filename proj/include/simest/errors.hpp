#pragma once

#include <stdexcept>
#include <string>

namespace simest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit together.
class DimensionError : public Error {
   public:
    using Error::Error;
};

/// Input violates a documented invariant (non-finite entries, bad coefficients, ...).
class ValidationError : public Error {
   public:
    using Error::Error;
};

/// An iterative kernel failed to converge or broke down.
class NumericError : public Error {
   public:
    using Error::Error;
};

/// The equation has no (stabilizing) solution for the given data.
class SolvabilityError : public Error {
   public:
    using Error::Error;
};

/// Hamiltonian eigenvalues on (or numerically at) the imaginary axis.
class BoundaryError : public SolvabilityError {
   public:
    using SolvabilityError::SolvabilityError;
};

/// Operation requested outside its mathematical domain (e.g. norm of an unstable system).
class DomainError : public Error {
   public:
    using Error::Error;
};

/// A synthesis stage could not produce a result.
class SynthesisError : public Error {
   public:
    using Error::Error;
};

}  // namespace simest

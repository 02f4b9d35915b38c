// Error taxonomy shared by all modules. Every failure mode that callers are
// expected to handle gets its own type so tests can assert on it.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace so3tengen {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Axis list is not a permutation, or an axis is referenced twice.
struct InvalidPermutation : Error {
  using Error::Error;
};

// Extents disagree along a contracted or compared axis.
struct ShapeMismatch : Error {
  using Error::Error;
};

// An input slot has no bound tensor at evaluation time.
struct MissingBinding : Error {
  using Error::Error;
};

// Malformed network: bad node index, leg used twice, wrong arity.
struct InvalidNode : Error {
  using Error::Error;
};

// Representation label out of range (negative type, s > l, unsupported cap).
struct InvalidType : Error {
  using Error::Error;
};

// Realification of a projector left an imaginary residual; the change of
// basis is inconsistent with the ladder convention.
struct BasisConventionError : Error {
  using Error::Error;
};

// Enumeration would exceed a hard cap; carries the count that overflowed.
struct EnumerationTooLarge : Error {
  EnumerationTooLarge(const std::string& what, std::size_t n)
      : Error(what), count(n) {}
  std::size_t count;
};

// Deformation gradient with non-positive determinant.
struct NonPhysicalDeformation : Error {
  using Error::Error;
};

// Non-finite loss or parameter during optimisation.
struct TrainingDiverged : Error {
  using Error::Error;
};

// Two tensors expected to be proportional are not.
struct ProportionalityFailure : Error {
  using Error::Error;
};

}  // namespace so3tengen

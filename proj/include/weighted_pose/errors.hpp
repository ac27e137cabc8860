#pragma once

#include <stdexcept>
#include <string>

namespace wpose {

// Base for every error the library raises on bad input or unsolvable geometry.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range input (shape mismatch, non-finite values,
// non-rotation matrices, blend outside [0,1], unknown names).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// All effective weights are zero, or a weight vector cannot be normalized.
class InvalidWeights : public Error {
 public:
  using Error::Error;
};

// The weighted de-meaned source stack has rank < 2; rotation is unrecoverable.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

}  // namespace wpose

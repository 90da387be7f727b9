#pragma once

#include <stdexcept>
#include <string>

namespace mub {

// Input vector or matrix does not have the shape the operation needs.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A problem specification or configuration failed validation.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Polynomial degree exceeds what the moment layout can linearize.
class LevelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalTrouble : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mub

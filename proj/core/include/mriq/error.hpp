#pragma once

#include <stdexcept>
#include <string>

namespace mriq {

// Base of every error the library raises. Callers that only need a
// diagnostic can catch this; the subclasses name the failure category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Inputs are well-formed but the quantity is undefined (zero denominator,
// constant ranks, no expected disagreement, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class NumericalDegeneracy : public Error {
 public:
  using Error::Error;
};

class MissingLabel : public Error {
 public:
  using Error::Error;
};

class MissingRuler : public Error {
 public:
  using Error::Error;
};

// Operation called on an object that is not yet in the required state
// (e.g. ruler without cached scores).
class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mriq

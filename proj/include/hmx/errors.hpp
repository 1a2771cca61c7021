#pragma once

#include <stdexcept>
#include <string>

namespace hmx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of a function (e.g. t <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A point outside the truncation box of a grid.
class OutOfDomain : public Error {
 public:
  using Error::Error;
};

/// A construction needs grid cubes beyond the truncation box.
class Truncated : public Error {
 public:
  using Error::Error;
};

/// t -> k_t(x, y) has no interior maximum (supremum at t -> 0+).
class NoInteriorMax : public Error {
 public:
  using Error::Error;
};

class NonIntegrable : public Error {
 public:
  using Error::Error;
};

class NegativeValue : public Error {
 public:
  using Error::Error;
};

/// No admissible neighbourhood cube exists for a grid cube. Never expected;
/// raised instead of relaxing the sidelength requirement.
class NoNeighbourhood : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmx

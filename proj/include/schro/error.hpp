#pragma once

#include <stdexcept>
#include <string>

namespace schro {

/// Bad caller input: wrong shapes, out-of-domain parameters, malformed specs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inputs the method does not handle (e.g. degenerate ground level).
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recovery found no weight where the solution has to live.
class DegenerateState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense oracles refuse problems above their dimension cap.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Explicit time stepping blew up.
class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Something that the types should have prevented (non-Hermitian block, ...).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace schro

#pragma once

#include <stdexcept>
#include <string>

namespace prefine {

// Root of every exception the library throws. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable input data (files, metadata, pair lists).
class InputError : public Error {
 public:
  using Error::Error;
};

// A numeric or enumerated parameter outside its valid domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Work refused up front because it would be intractable (e.g. 2^N_P enumeration).
class GuardError : public Error {
 public:
  using Error::Error;
};

// Two arguments that must agree do not (selection vs. pair list, etc).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace prefine

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace vocalplan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments, unreadable files, malformed manifests.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The conductor endpoint could not be reached or answered with a failure
/// status. `transient()` tells whether a retry may help.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool transient)
      : Error(what), transient_(transient) {}
  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

/// The conductor answered, but not in the fenced-JSON contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A vocal plan failed validation.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace vocalplan

// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pam {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: bad dims, unknown stage, unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid user input: malformed prompt, bad timestamps, undecodable media.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced by an operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Bad data from an annotation source (empty response, schema violation).
class DataError : public Error {
 public:
  using Error::Error;
};

/// External client failure. Retriable by the caller.
class ClientError : public Error {
 public:
  using Error::Error;
};

/// Reply from a judge that does not follow the scoring protocol.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw_reply)
      : Error(what), raw_reply_(std::move(raw_reply)) {}
  const std::string& raw_reply() const noexcept { return raw_reply_; }

 private:
  std::string raw_reply_;
};

}  // namespace pam

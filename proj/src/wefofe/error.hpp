// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace wefofe {

enum class ErrorKind {
  Config,
  Data,
  Dimension,
  Index,
  Routing,
  Comparison,
  Numeric,
  Io,
  Internal,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` drives the C status code
/// and the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool cond, ErrorKind kind, const std::string& message) {
  if (!cond) throw Error(kind, message);
}

}  // namespace wefofe

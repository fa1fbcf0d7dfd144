// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/error.hpp"

namespace wefofe {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Data: return "data";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Index: return "index";
    case ErrorKind::Routing: return "routing";
    case ErrorKind::Comparison: return "comparison";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Io: return "io";
    case ErrorKind::Internal: return "internal";
  }
  return "internal";
}

}  // namespace wefofe

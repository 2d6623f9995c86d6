// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/error.hpp"

namespace stimkit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kConflict: return "conflict error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kRange: return "range error";
    case ErrorKind::kSize: return "size error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kInvalidSequence: return "invalid sequence";
  }
  return "error";
}

}  // namespace stimkit

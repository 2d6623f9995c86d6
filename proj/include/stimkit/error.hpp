// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace stimkit {

enum class ErrorKind {
  kParse,
  kFormat,
  kSchema,
  kConflict,
  kValidation,
  kShape,
  kConfig,
  kRange,
  kSize,
  kIo,
  kNumeric,
  kInvalidSequence,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// onto a stable exit code.
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

}  // namespace stimkit

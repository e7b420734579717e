// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The zonecsi authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace zonecsi {

enum class ErrorKind {
  InvalidArgument,
  InvalidConfig,
  OutOfDomain,
  DegenerateInput,
  DimensionMismatch,
  EmptyZone,
  UndefinedRatio,
  NumericFailure,
  ParseError,
  CorruptBundle,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::EmptyZone: return "empty-zone";
    case ErrorKind::UndefinedRatio: return "undefined-ratio";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::ParseError: return "parse-error";
    case ErrorKind::CorruptBundle: return "corrupt-bundle";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse failures carry the byte offset at which the reader gave up.
class ParseError : public Error {
 public:
  ParseError(std::uint64_t offset, const std::string& what)
      : Error(ErrorKind::ParseError, what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// CLI exit code for an error kind: 2 config, 3 data, 4 numeric.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidConfig:
      return 2;
    case ErrorKind::NumericFailure:
      return 4;
    default:
      return 3;
  }
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace zonecsi

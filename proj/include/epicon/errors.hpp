/* Copyright 2026 The epicon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace epicon {

enum class ErrorCode {
  kDegenerateMotion,
  kLineUndefined,
  kNonFiniteInput,
  kEmptyRow,
  kDimensionMismatch,
  kDegenerateSchedule,
  kParseError,
  kNonRotation,
  kFormatError,
  kInvalidArgument,
  kIo,
};

/// Base class of every error raised by the library. `code()` identifies the
/// failure class so callers (the CLI in particular) can map it to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Zero baseline between two cameras: the fundamental matrix vanishes.
class DegenerateMotion : public Error {
 public:
  explicit DegenerateMotion(const std::string& what)
      : Error(ErrorCode::kDegenerateMotion, what) {}
};

/// F * (u, v, 1) has no finite line part (the query sits on the epipole).
class LineUndefined : public Error {
 public:
  explicit LineUndefined(const std::string& what)
      : Error(ErrorCode::kLineUndefined, what) {}
};

class NonFiniteInput : public Error {
 public:
  explicit NonFiniteInput(const std::string& what)
      : Error(ErrorCode::kNonFiniteInput, what) {}
};

class EmptyRow : public Error {
 public:
  explicit EmptyRow(const std::string& what)
      : Error(ErrorCode::kEmptyRow, what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error(ErrorCode::kDimensionMismatch, what) {}
};

class DegenerateSchedule : public Error {
 public:
  explicit DegenerateSchedule(const std::string& what)
      : Error(ErrorCode::kDegenerateSchedule, what) {}
};

/// Text parse failure. `line()` is 1-based; 0 when no line applies.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error(ErrorCode::kParseError,
              line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

class NonRotation : public Error {
 public:
  explicit NonRotation(const std::string& what)
      : Error(ErrorCode::kNonRotation, what) {}
};

/// Malformed binary file (bad magic, truncated payload, trailing bytes).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ErrorCode::kFormatError, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::kInvalidArgument, what) {}
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

}  // namespace epicon

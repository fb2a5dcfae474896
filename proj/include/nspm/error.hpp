// Copyright 2026 The nspm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nspm {

// Broad category of a failure; the C API maps these onto status codes.
enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kParse,
  kData,
  kModel,
  kNumeric,
};

// Base for every domain error. `code()` is module-qualified, for example
// "kb.MalformedLine" or "codec.DecodeError", and is stable across releases.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

// Raised by parsers that report a 0-based position in their input.
class PositionedError : public Error {
 public:
  PositionedError(ErrorKind kind, std::string code, std::size_t position,
                  const std::string& message)
      : Error(kind, std::move(code), message), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace nspm

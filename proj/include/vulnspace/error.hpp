// Copyright 2026 The Vulnspace Authors.
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

#ifndef VULNSPACE_ERROR_HPP
#define VULNSPACE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vulnspace {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wrong magic, unsupported version, or a text file violating its grammar.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A binary artifact ended early or carries inconsistent lengths.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Malformed JSON input. `offset()` is the byte position reported by the parser.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset) : Error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Optimization produced a non-finite loss or gradient.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace vulnspace

#endif  // VULNSPACE_ERROR_HPP

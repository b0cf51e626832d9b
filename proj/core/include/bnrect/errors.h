// Copyright 2026 The bnrect Authors.
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

#ifndef BNRECT_ERRORS_H_
#define BNRECT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace bnrect {

// Error categories. The CLI maps these onto process exit codes
// (format/io -> 3, shape/semantic -> 4).
enum class ErrorKind { kShape, kSemantic, kFormat, kIo, kNumeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Tensor or dataset extents that do not compose.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error(ErrorKind::kShape, m) {}
};

// Well-formed input that violates a contract (unknown preset, label out of
// range, policy naming a non-BN layer, ...).
class SemanticError : public Error {
 public:
  explicit SemanticError(const std::string& m)
      : Error(ErrorKind::kSemantic, m) {}
};

// Malformed file contents: bad magic, truncated blob, unparsable manifest.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error(ErrorKind::kFormat, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::kIo, m) {}
};

// Training diverged (NaN/Inf loss).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m)
      : Error(ErrorKind::kNumeric, m) {}
};

const char* to_string(ErrorKind kind);

}  // namespace bnrect

#endif  // BNRECT_ERRORS_H_

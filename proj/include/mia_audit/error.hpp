// Copyright 2026 The MIA Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
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

namespace mia_audit {

// Failure classes. The CLI maps kValidation to exit code 2 and the other two
// to exit code 3.
enum class ErrorKind {
  kValidation,    // malformed input file, bad config value, shape mismatch
  kPrecondition,  // the data cannot support the requested attack
  kDomain,        // a confidence transform left its valid domain
};

class AuditError : public std::runtime_error {
 public:
  AuditError(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void ThrowValidation(const std::string& message) {
  throw AuditError(ErrorKind::kValidation, message);
}

[[noreturn]] inline void ThrowPrecondition(const std::string& message) {
  throw AuditError(ErrorKind::kPrecondition, message);
}

[[noreturn]] inline void ThrowDomain(const std::string& message) {
  throw AuditError(ErrorKind::kDomain, message);
}

inline std::string Coord(std::size_t row, std::size_t col) {
  return "(" + std::to_string(row) + "," + std::to_string(col) + ")";
}

}  // namespace mia_audit

//
// Copyright 2026 The SPDL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef SPDL_ERROR_H_
#define SPDL_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spdl {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Inconsistent experiment or model configuration (dimensions, node counts).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

// Raised when a block cannot be linked onto a chain. `check()` names the
// failed invariant ("prev-hash", "height", "self-hash", "genesis").
class ChainIntegrityError : public Error {
 public:
  ChainIntegrityError(std::string check, const std::string& what)
      : Error("chain integrity: " + check + ": " + what),
        check_(std::move(check)) {}
  const std::string& check() const { return check_; }

 private:
  std::string check_;
};

// Malformed input file; `offset()` is the byte position of the problem.
class IngestionError : public Error {
 public:
  IngestionError(std::uint64_t offset, const std::string& what)
      : Error("ingestion error at offset " + std::to_string(offset) + ": " +
              what),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class ElectionFailed : public Error {
 public:
  using Error::Error;
};

// Honest nodes disagree on chain or model state.
class SafetyViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace spdl

#endif  // SPDL_ERROR_H_

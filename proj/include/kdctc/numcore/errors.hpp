// Copyright 2026 The kdctc Authors. All Rights Reserved.
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

#ifndef KDCTC_NUMCORE_ERRORS_HPP
#define KDCTC_NUMCORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kdctc {

/// Root of every error thrown by the library. `exit_code()` is what the CLI
/// returns when the error escapes a command.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Teacher and student frame sequences (or paired spike sequences) disagree
/// in length.
class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

/// The label cannot be produced in the available number of frames. Kept
/// apart from NumericError so callers can skip such utterances.
class InfeasibleAlignmentError : public DataError {
 public:
  using DataError::DataError;
};

/// A precondition between two objects was broken (e.g. a forward trace used
/// with parameters that changed since it was recorded).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Refusal to run an exponential-cost routine on an oversize instance.
class GuardError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace kdctc

#endif  // KDCTC_NUMCORE_ERRORS_HPP

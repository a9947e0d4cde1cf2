// Copyright (c) 2026 The PMVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PMVC_ERROR_H_
#define PMVC_ERROR_H_

#include <stdexcept>
#include <string>
#include <utility>

namespace pmvc {

// Process exit codes used by the command line tool.
enum class ExitCode : int {
  kOk = 0,
  kValidation = 1,
  kRuntime = 2,
  kIo = 3,
};

// Base of every error raised by the library. `code()` is a short stable
// identifier printed next to the human readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, ExitCode exit_code, const std::string& message)
      : std::runtime_error(message),
        code_(std::move(code)),
        exit_code_(exit_code) {}

  const std::string& code() const { return code_; }
  ExitCode exit_code() const { return exit_code_; }

 private:
  std::string code_;
  ExitCode exit_code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error("E_VALIDATION", ExitCode::kValidation, message) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message)
      : Error("E_DOMAIN", ExitCode::kValidation, message) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& message)
      : Error("E_CONFIG", ExitCode::kValidation, message) {}
};

// Missing or untrained model state (checkpoint absent, predictor absent...).
class StateError : public Error {
 public:
  explicit StateError(const std::string& message)
      : Error("E_STATE", ExitCode::kValidation, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error("E_IO", ExitCode::kIo, message) {}
};

// A loss component became non-finite. `component()` names it.
class TrainingDivergenceError : public Error {
 public:
  TrainingDivergenceError(std::string component, const std::string& message)
      : Error("E_DIVERGED", ExitCode::kRuntime, message),
        component_(std::move(component)) {}

  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

}  // namespace pmvc

#endif  // PMVC_ERROR_H_

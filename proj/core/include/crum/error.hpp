// Copyright 2026 The CRUM Authors.
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

#ifndef CRUM_ERROR_HPP_
#define CRUM_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace crum {

enum class ErrorCategory {
  kParse,
  kSchema,
  kConfig,
  kDomain,
  kNumeric,
  kTraining,
  kDependency,
  kRefusal,
  kIo,
};

// Stable machine-readable name, also used by the CLI on stderr.
std::string_view category_name(ErrorCategory category);

// Process exit code for a category; 0 is reserved for success.
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCategory::kParse,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

#define CRUM_DEFINE_ERROR(Name, Category)                              \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message)                          \
        : Error(ErrorCategory::Category, message) {}                   \
  };

CRUM_DEFINE_ERROR(SchemaError, kSchema)
CRUM_DEFINE_ERROR(ConfigError, kConfig)
CRUM_DEFINE_ERROR(DomainError, kDomain)
CRUM_DEFINE_ERROR(NumericError, kNumeric)
CRUM_DEFINE_ERROR(TrainingError, kTraining)
CRUM_DEFINE_ERROR(DependencyError, kDependency)
CRUM_DEFINE_ERROR(RefusalError, kRefusal)
CRUM_DEFINE_ERROR(IoError, kIo)

#undef CRUM_DEFINE_ERROR

}  // namespace crum

#endif  // CRUM_ERROR_HPP_

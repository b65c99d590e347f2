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

#include "crum/error.hpp"

namespace crum {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kParse: return "parse";
    case ErrorCategory::kSchema: return "schema";
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kDomain: return "domain";
    case ErrorCategory::kNumeric: return "numeric";
    case ErrorCategory::kTraining: return "training";
    case ErrorCategory::kDependency: return "dependency";
    case ErrorCategory::kRefusal: return "refusal";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kParse: return 10;
    case ErrorCategory::kSchema: return 11;
    case ErrorCategory::kConfig: return 12;
    case ErrorCategory::kDomain: return 13;
    case ErrorCategory::kNumeric: return 14;
    case ErrorCategory::kTraining: return 15;
    case ErrorCategory::kDependency: return 16;
    case ErrorCategory::kRefusal: return 17;
    case ErrorCategory::kIo: return 18;
  }
  return 1;
}

}  // namespace crum

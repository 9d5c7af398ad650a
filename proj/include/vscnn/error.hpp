/* Copyright 2026 The VSCNN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vscnn {

/// Error categories. The numeric value doubles as the CLI exit code.
enum class ErrorCategory : int {
  shape = 2,
  unsupported = 3,
  overflow = 4,
  capacity = 5,
  mismatch = 6,
  format = 7,
  consistency = 8,
  io = 9,
  config = 10,
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::unsupported: return "unsupported";
    case ErrorCategory::overflow: return "overflow";
    case ErrorCategory::capacity: return "capacity";
    case ErrorCategory::mismatch: return "mismatch";
    case ErrorCategory::format: return "format";
    case ErrorCategory::consistency: return "consistency";
    case ErrorCategory::io: return "io";
    case ErrorCategory::config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define VSCNN_DEFINE_ERROR(Name, cat)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(cat, what) {}       \
  }

VSCNN_DEFINE_ERROR(ShapeError, ErrorCategory::shape);
VSCNN_DEFINE_ERROR(UnsupportedError, ErrorCategory::unsupported);
VSCNN_DEFINE_ERROR(OverflowError, ErrorCategory::overflow);
VSCNN_DEFINE_ERROR(CapacityError, ErrorCategory::capacity);
VSCNN_DEFINE_ERROR(MismatchError, ErrorCategory::mismatch);
VSCNN_DEFINE_ERROR(FormatError, ErrorCategory::format);
VSCNN_DEFINE_ERROR(ConsistencyError, ErrorCategory::consistency);
VSCNN_DEFINE_ERROR(IoError, ErrorCategory::io);
VSCNN_DEFINE_ERROR(ConfigError, ErrorCategory::config);

#undef VSCNN_DEFINE_ERROR

}  // namespace vscnn

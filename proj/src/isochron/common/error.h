// Copyright 2026 The Isochron Authors
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

#ifndef ISOCHRON_COMMON_ERROR_H_
#define ISOCHRON_COMMON_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace isochron {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments to an API call: shape mismatches, out-of-range ids,
// inconsistent options. Maps to CLI exit code 1 when raised during
// argument handling.
struct UsageError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data (corpus files, JSON, checkpoints).
// Maps to CLI exit code 2.
struct DataError : Error {
  using Error::Error;
};

// Validation that collects every problem before failing.
struct ValidationError : DataError {
  explicit ValidationError(const std::vector<std::string>& problems)
      : DataError(Join(problems)), problems_(problems) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string Join(const std::vector<std::string>& ps) {
    std::string out = "validation failed:";
    for (const auto& p : ps) {
      out += "\n  - ";
      out += p;
    }
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace isochron

#define ISO_CHECK_T(ErrorType, cond, msg)            \
  do {                                               \
    if (!(cond)) {                                   \
      std::ostringstream iso_oss_;                   \
      iso_oss_ << msg;                               \
      throw ErrorType(iso_oss_.str());               \
    }                                                \
  } while (0)

#define ISO_CHECK(cond, msg) ISO_CHECK_T(::isochron::Error, cond, msg)
#define ISO_CHECK_ARG(cond, msg) ISO_CHECK_T(::isochron::UsageError, cond, msg)
#define ISO_CHECK_DATA(cond, msg) ISO_CHECK_T(::isochron::DataError, cond, msg)

#endif  // ISOCHRON_COMMON_ERROR_H_

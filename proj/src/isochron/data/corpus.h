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

#ifndef ISOCHRON_DATA_CORPUS_H_
#define ISOCHRON_DATA_CORPUS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isochron::data {

enum class Verbosity { Short = 0, Normal = 1, Long = 2 };

inline constexpr int kNumVerbosityClasses = 3;

// Canonical capitalized names: "Short" / "Normal" / "Long".
std::string_view to_string(Verbosity v);

// Case-insensitive; accepts "short", "Short", "SHORT", ...
Verbosity parse_verbosity(std::string_view text);

// Length ratio char_length(target) / char_length(source).
// Throws DataError when the source has zero characters.
double length_ratio(std::string_view source, std::string_view target);

// Verbosity class of a parallel pair by its length ratio LR:
//   Short  if LR < 0.97
//   Normal if 0.97 <= LR <= 1.05   (boundaries inclusive)
//   Long   if LR > 1.05
Verbosity classify_verbosity(std::string_view source, std::string_view target);

struct ParallelExample {
  int64_t id = 0;
  std::string source;
  std::string target;
  std::optional<Verbosity> verbosity;
};

// Sets verbosity = classify_verbosity(source, target) on every example,
// overwriting any stored class.
void classify_corpus(std::vector<ParallelExample>& examples);

// TSV corpus IO. One pair per line, LF endings:
//   source \t target [\t class]
// The class column, when present, is stored verbatim (parsed case
// insensitively); it is not checked against classify_verbosity. Malformed
// lines (wrong column count, empty fields, CR endings, embedded tabs,
// invalid UTF-8, unknown class names) raise DataError with the line number.
std::vector<ParallelExample> load_corpus(const std::string& path);
void save_corpus(const std::vector<ParallelExample>& examples,
                 const std::string& path);

}  // namespace isochron::data

#endif  // ISOCHRON_DATA_CORPUS_H_

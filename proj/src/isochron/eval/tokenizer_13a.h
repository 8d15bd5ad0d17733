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

#ifndef ISOCHRON_EVAL_TOKENIZER_13A_H_
#define ISOCHRON_EVAL_TOKENIZER_13A_H_

#include <string>
#include <string_view>
#include <vector>

namespace isochron::eval {

// mteval-v13a tokenization: strips "<skipped>", joins hyphenated line
// breaks, unescapes the four XML entities, then splits ASCII punctuation
// (apostrophe, period, comma and hyphen excepted), periods and commas not
// adjacent to digits, and hyphens after digits. Multi-byte UTF-8 characters
// pass through untouched. Returns whitespace-separated tokens.
std::vector<std::string> tokenize_13a(std::string_view text);

}  // namespace isochron::eval

#endif  // ISOCHRON_EVAL_TOKENIZER_13A_H_

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

#ifndef ISOCHRON_DATA_UNICODE_H_
#define ISOCHRON_DATA_UNICODE_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace isochron::data {

// Strict UTF-8 decoding: rejects overlong forms, surrogates, out-of-range
// scalars and truncated sequences, reporting the byte offset.
std::vector<char32_t> utf8_decode(std::string_view s);

std::string utf8_encode(std::span<const char32_t> cps);
std::string utf8_encode_one(char32_t cp);

// Canonical composition (NFC): full canonical decomposition, canonical
// reordering, then canonical recomposition, per the standard algorithm.
// Hangul is handled algorithmically; everything else comes from generated
// tables (see tools/gen_unicode_tables.py).
std::vector<char32_t> nfc(std::span<const char32_t> cps);
std::string nfc_utf8(std::string_view s);

// Number of Unicode scalar values after NFC normalization. This is the
// length measure used for verbosity classes and budgets everywhere.
int64_t char_length(std::string_view s);

uint8_t canonical_combining_class(char32_t cp);

}  // namespace isochron::data

#endif  // ISOCHRON_DATA_UNICODE_H_

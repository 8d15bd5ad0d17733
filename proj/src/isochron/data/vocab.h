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

#ifndef ISOCHRON_DATA_VOCAB_H_
#define ISOCHRON_DATA_VOCAB_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlohmann/json.hpp"

#include "isochron/data/corpus.h"

namespace isochron::data {

// Reserved token ids, fixed across every vocabulary.
inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kVShortId = 4;
inline constexpr int kVNormalId = 5;
inline constexpr int kVLongId = 6;
inline constexpr int kNumReserved = 7;

int verbosity_token_id(Verbosity v);
Verbosity verbosity_from_token_id(int id);

// Character-level vocabulary. Non-reserved entries are single Unicode
// scalars (NFC form), assigned ids 7.. in ascending codepoint order.
class Vocabulary {
 public:
  // Reserved entries only.
  Vocabulary();

  // Collects every NFC scalar appearing in the sources and targets of the
  // given corpora.
  static Vocabulary build(
      const std::vector<const std::vector<ParallelExample>*>& corpora);

  // Restores a vocabulary from the non-reserved character list, in id order.
  static Vocabulary from_characters(const std::vector<std::string>& characters);

  int size() const { return static_cast<int>(id_to_token_.size()); }

  // NFC-normalizes, then maps each scalar to its id; unknown scalars map to
  // UNK. Never produces reserved ids other than UNK.
  std::vector<int> tokenize(std::string_view text) const;

  // Inverse of tokenize for in-vocabulary text: concatenates character
  // tokens. UNK renders as U+2047 (double question mark); the other reserved
  // ids render as nothing.
  std::string detokenize(std::span<const int> ids) const;

  // Display form of one token: character tokens as themselves, reserved ids
  // as their angle-bracket names.
  const std::string& token(int id) const;

  std::optional<int> id_of(char32_t cp) const;
  static bool is_reserved(int id) { return id >= 0 && id < kNumReserved; }

  // JSON array of the non-reserved characters in id order.
  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const;

 private:
  std::vector<std::string> id_to_token_;
  std::vector<char32_t> id_to_scalar_;  // aligned with id_to_token_; 0 for reserved
  std::unordered_map<char32_t, int> scalar_to_id_;

  void add_scalar(char32_t cp);
};

// Token-level training pair derived from a ParallelExample.
//   source_ids: source characters, optionally with a verbosity token at
//               position 0; no EOS (the encoder consumes exactly these ids).
//   target_ids: target characters only; BOS/EOS are the model's concern.
struct TrainingPair {
  std::vector<int> source_ids;
  std::vector<int> target_ids;
  std::optional<Verbosity> verbosity;
};

enum class TagPlacement { None, PrependSource };

// Tokenizes an example and applies the requested verbosity tagging.
// PrependSource requires example.verbosity to be set.
TrainingPair tag_example(const ParallelExample& example, const Vocabulary& vocab,
                         TagPlacement placement);

}  // namespace isochron::data

#endif  // ISOCHRON_DATA_VOCAB_H_

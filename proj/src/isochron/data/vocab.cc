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

#include "isochron/data/vocab.h"

#include <algorithm>
#include <set>

#include "isochron/common/error.h"
#include "isochron/data/unicode.h"

namespace isochron::data {
namespace {

constexpr const char* kReservedNames[kNumReserved] = {
    "<pad>", "<bos>", "<eos>", "<unk>", "<v:short>", "<v:normal>", "<v:long>"};

constexpr char32_t kUnkGlyph = 0x2047;  // U+2047 DOUBLE QUESTION MARK

}  // namespace

int verbosity_token_id(Verbosity v) {
  switch (v) {
    case Verbosity::Short:
      return kVShortId;
    case Verbosity::Normal:
      return kVNormalId;
    case Verbosity::Long:
      return kVLongId;
  }
  throw UsageError("invalid Verbosity value");
}

Verbosity verbosity_from_token_id(int id) {
  switch (id) {
    case kVShortId:
      return Verbosity::Short;
    case kVNormalId:
      return Verbosity::Normal;
    case kVLongId:
      return Verbosity::Long;
    default:
      throw UsageError("token id " + std::to_string(id) +
                       " is not a verbosity token");
  }
}

Vocabulary::Vocabulary() {
  id_to_token_.reserve(kNumReserved);
  for (const char* name : kReservedNames) id_to_token_.emplace_back(name);
  id_to_scalar_.assign(kNumReserved, 0);
}

void Vocabulary::add_scalar(char32_t cp) {
  const int id = size();
  id_to_token_.push_back(utf8_encode_one(cp));
  id_to_scalar_.push_back(cp);
  const bool inserted = scalar_to_id_.emplace(cp, id).second;
  ISO_CHECK_DATA(inserted, "duplicate vocabulary character U+" << std::hex
                                                               << uint32_t(cp));
}

Vocabulary Vocabulary::build(
    const std::vector<const std::vector<ParallelExample>*>& corpora) {
  std::set<char32_t> scalars;
  for (const auto* corpus : corpora) {
    ISO_CHECK_ARG(corpus != nullptr, "Vocabulary::build: null corpus");
    for (const auto& ex : *corpus) {
      for (std::string_view text : {std::string_view(ex.source),
                                    std::string_view(ex.target)}) {
        const std::string norm = nfc_utf8(text);
        for (char32_t cp : utf8_decode(norm)) scalars.insert(cp);
      }
    }
  }
  Vocabulary vocab;
  for (char32_t cp : scalars) vocab.add_scalar(cp);
  return vocab;
}

Vocabulary Vocabulary::from_characters(const std::vector<std::string>& characters) {
  Vocabulary vocab;
  char32_t prev = 0;
  for (const auto& ch : characters) {
    const std::vector<char32_t> cps = utf8_decode(ch);
    ISO_CHECK_DATA(cps.size() == 1,
                   "vocabulary entry \"" << ch << "\" is not a single scalar");
    ISO_CHECK_DATA(cps[0] > prev || vocab.size() == kNumReserved,
                   "vocabulary characters out of order at \"" << ch << "\"");
    vocab.add_scalar(cps[0]);
    prev = cps[0];
  }
  return vocab;
}

std::vector<int> Vocabulary::tokenize(std::string_view text) const {
  const std::string norm = nfc_utf8(text);
  const std::vector<char32_t> cps = utf8_decode(norm);
  std::vector<int> ids;
  ids.reserve(cps.size());
  for (char32_t cp : cps) {
    const auto it = scalar_to_id_.find(cp);
    ids.push_back(it == scalar_to_id_.end() ? kUnkId : it->second);
  }
  return ids;
}

std::string Vocabulary::detokenize(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    ISO_CHECK_ARG(id >= 0 && id < size(),
                  "detokenize: token id " << id << " out of range");
    if (id == kUnkId) {
      out += utf8_encode_one(kUnkGlyph);
    } else if (is_reserved(id)) {
      continue;
    } else {
      out += id_to_token_[static_cast<size_t>(id)];
    }
  }
  return out;
}

const std::string& Vocabulary::token(int id) const {
  ISO_CHECK_ARG(id >= 0 && id < size(), "token id " << id << " out of range");
  return id_to_token_[static_cast<size_t>(id)];
}

std::optional<int> Vocabulary::id_of(char32_t cp) const {
  const auto it = scalar_to_id_.find(cp);
  if (it == scalar_to_id_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (int id = kNumReserved; id < size(); ++id) {
    arr.push_back(id_to_token_[static_cast<size_t>(id)]);
  }
  return arr;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  ISO_CHECK_DATA(j.is_array(), "vocabulary JSON must be an array of characters");
  std::vector<std::string> characters;
  characters.reserve(j.size());
  for (const auto& item : j) {
    ISO_CHECK_DATA(item.is_string(), "vocabulary JSON entries must be strings");
    characters.push_back(item.get<std::string>());
  }
  return from_characters(characters);
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  return id_to_token_ == other.id_to_token_;
}

TrainingPair tag_example(const ParallelExample& example, const Vocabulary& vocab,
                         TagPlacement placement) {
  TrainingPair pair;
  pair.source_ids = vocab.tokenize(example.source);
  pair.target_ids = vocab.tokenize(example.target);
  pair.verbosity = example.verbosity;
  if (placement == TagPlacement::PrependSource) {
    ISO_CHECK_DATA(example.verbosity.has_value(),
                   "tag_example: PrependSource requires a verbosity class "
                   "(example id " << example.id << ")");
    pair.source_ids.insert(pair.source_ids.begin(),
                           verbosity_token_id(*example.verbosity));
  }
  return pair;
}

}  // namespace isochron::data

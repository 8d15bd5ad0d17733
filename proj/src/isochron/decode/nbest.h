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

#ifndef ISOCHRON_DECODE_NBEST_H_
#define ISOCHRON_DECODE_NBEST_H_

#include <filesystem>
#include <vector>

#include "isochron/decode/search.h"

namespace isochron::decode {

struct NBestEntry {
  int64_t id = 0;
  NBestList list;
};

// N-best lists travel as JSON Lines, one object per source:
//   {"id": int, "source": str, "source_chars": int,
//    "hypotheses": [{"text": str, "logprob": float, "chars": int,
//                    "score": float}]}
// with hypotheses sorted by score descending. A hypothesis carries
// "forced_eos": true only when the flag is set, and "rescored": float only
// after a rescoring pass has attached one. Doubles round-trip exactly
// (shortest representation that parses back bit-identically), so a
// save/load/save cycle is byte-stable.
void save_nbest(const std::vector<NBestEntry>& entries,
                const std::filesystem::path& path);

// Loads a JSONL file written by save_nbest. Token ids are not serialized, so
// loaded hypotheses have empty token_ids; text, logprob, chars and score are
// restored. Malformed lines raise DataError naming the line number.
std::vector<NBestEntry> load_nbest(const std::filesystem::path& path);

}  // namespace isochron::decode

#endif  // ISOCHRON_DECODE_NBEST_H_

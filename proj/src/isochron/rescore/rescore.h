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

#ifndef ISOCHRON_RESCORE_RESCORE_H_
#define ISOCHRON_RESCORE_RESCORE_H_

#include <cstdint>
#include <string_view>

#include "isochron/decode/search.h"

namespace isochron::rescore {

// Length-similarity term of the combined score.
enum class Scorer {
  Diff,   // symmetric: 1 / (1 + |len_t - len_s|)
  Ratio,  // unidirectional: 1 / (1 + len_t / len_s), or reversed
};

// Which way the Ratio scorer pushes lengths. Shorten rewards targets shorter
// than the source, Lengthen rewards longer ones (the ratio flips).
enum class Direction {
  Shorten,
  Lengthen,
};

// Canonical lowercase names: "diff" / "ratio", "shorten" / "lengthen".
std::string_view to_string(Scorer s);
std::string_view to_string(Direction d);

// Case-insensitive; throw UsageError for unknown names.
Scorer parse_scorer(std::string_view name);
Direction parse_direction(std::string_view name);

struct RescoreParams {
  double alpha = 0.5;                     // weight of the synchrony term
  Scorer scorer = Scorer::Ratio;
  Direction direction = Direction::Shorten;  // ignored for Diff
  bool normalize_logprob = false;         // per-token mean instead of raw sum

  // Throws UsageError unless alpha lies in [0, 1].
  void validate() const;
};

// Symmetric synchrony score 1 / (1 + |len_t - len_s|), in (0, 1]. Lengths are
// character counts and must be non-negative.
double sync_score_diff(int64_t len_t, int64_t len_s);

// Unidirectional synchrony score. Shorten: 1 / (1 + len_t / len_s), strictly
// decreasing in the target length (empty target scores 1.0); Lengthen flips
// the ratio: 1 / (1 + len_s / len_t), strictly increasing in the target
// length. The denominator length must be positive: len_s for Shorten, len_t
// for Lengthen.
double sync_score_ratio(int64_t len_t, int64_t len_s, Direction direction);

// Re-ranks an n-best list by the combined score
//   (1 - alpha) * log P + alpha * S_p
// where log P is the hypothesis sum log-probability (divided by the token
// count, char_len + 1 for the EOS, when normalize_logprob is set) and S_p is
// the synchrony score of the hypothesis length against source_chars. The
// combined value is attached as Hypothesis::rescored and the list is
// stable-sorted by it descending, so ties keep their prior rank. Texts,
// log-probabilities and search scores are returned untouched; only order and
// the attached value change. The list must be nonempty and source_chars
// positive. With alpha = 0 the ranking is exactly the log-probability
// ranking; with alpha = 1, Ratio/Shorten ranks by ascending char length.
decode::NBestList rescore(const decode::NBestList& nbest,
                          const RescoreParams& params);

}  // namespace isochron::rescore

#endif  // ISOCHRON_RESCORE_RESCORE_H_

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

#ifndef ISOCHRON_EVAL_BLEU_H_
#define ISOCHRON_EVAL_BLEU_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace isochron::eval {

// Sufficient statistics of corpus BLEU-4: clipped n-gram matches and
// totals for n = 1..4 plus token lengths. Statistics of disjoint shards
// add, so corpus scores can be merged.
struct BleuStats {
  std::array<int64_t, 4> matches = {0, 0, 0, 0};
  std::array<int64_t, 4> totals = {0, 0, 0, 0};
  int64_t hyp_len = 0;
  int64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& other);
};

// Statistics of one sentence pair under 13a tokenization.
BleuStats sentence_stats(std::string_view hypothesis, std::string_view reference);

// BLEU in [0, 100] from accumulated statistics: geometric mean of the four
// modified precisions times the brevity penalty exp(1 - ref/hyp) when the
// hypothesis corpus is shorter. A zero precision (or an empty total) enters
// the log as 1e-9 so the score stays defined; an empty hypothesis corpus
// scores 0.
double bleu_from_stats(const BleuStats& stats);

// Corpus BLEU-4 of aligned hypothesis/reference lists (equal lengths >= 1).
double bleu(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references);

}  // namespace isochron::eval

#endif  // ISOCHRON_EVAL_BLEU_H_

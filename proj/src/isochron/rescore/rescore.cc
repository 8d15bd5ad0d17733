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

#include "isochron/rescore/rescore.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "isochron/common/error.h"

namespace isochron::rescore {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(Scorer s) {
  return s == Scorer::Diff ? "diff" : "ratio";
}

std::string_view to_string(Direction d) {
  return d == Direction::Shorten ? "shorten" : "lengthen";
}

Scorer parse_scorer(std::string_view name) {
  const std::string n = lower(name);
  if (n == "diff") return Scorer::Diff;
  if (n == "ratio") return Scorer::Ratio;
  throw UsageError("unknown scorer \"" + std::string(name) +
                   "\" (expected diff or ratio)");
}

Direction parse_direction(std::string_view name) {
  const std::string n = lower(name);
  if (n == "shorten") return Direction::Shorten;
  if (n == "lengthen") return Direction::Lengthen;
  throw UsageError("unknown direction \"" + std::string(name) +
                   "\" (expected shorten or lengthen)");
}

void RescoreParams::validate() const {
  ISO_CHECK_ARG(alpha >= 0.0 && alpha <= 1.0,
                "rescore: alpha must lie in [0, 1], got " << alpha);
}

double sync_score_diff(int64_t len_t, int64_t len_s) {
  ISO_CHECK_ARG(len_t >= 0 && len_s >= 0,
                "sync_score_diff: lengths must be non-negative, got "
                    << len_t << " and " << len_s);
  return 1.0 / (1.0 + static_cast<double>(std::abs(len_t - len_s)));
}

double sync_score_ratio(int64_t len_t, int64_t len_s, Direction direction) {
  ISO_CHECK_ARG(len_t >= 0 && len_s >= 0,
                "sync_score_ratio: lengths must be non-negative, got "
                    << len_t << " and " << len_s);
  if (direction == Direction::Shorten) {
    ISO_CHECK_ARG(len_s > 0, "sync_score_ratio: zero denominator (source "
                             "length must be positive when shortening)");
    return 1.0 / (1.0 + static_cast<double>(len_t) / static_cast<double>(len_s));
  }
  ISO_CHECK_ARG(len_t > 0, "sync_score_ratio: zero denominator (target "
                           "length must be positive when lengthening)");
  return 1.0 / (1.0 + static_cast<double>(len_s) / static_cast<double>(len_t));
}

decode::NBestList rescore(const decode::NBestList& nbest,
                          const RescoreParams& params) {
  params.validate();
  ISO_CHECK_ARG(!nbest.hypotheses.empty(),
                "rescore: empty hypothesis list for source \"" << nbest.source
                                                               << "\"");
  ISO_CHECK_ARG(nbest.source_chars > 0,
                "rescore: source_chars must be positive, got "
                    << nbest.source_chars);

  decode::NBestList out = nbest;
  for (decode::Hypothesis& h : out.hypotheses) {
    double logp = h.sum_logprob;
    if (params.normalize_logprob) {
      logp /= static_cast<double>(h.char_len + 1);
    }
    const double sp = params.scorer == Scorer::Diff
                          ? sync_score_diff(h.char_len, nbest.source_chars)
                          : sync_score_ratio(h.char_len, nbest.source_chars,
                                             params.direction);
    h.rescored = (1.0 - params.alpha) * logp + params.alpha * sp;
  }
  std::stable_sort(out.hypotheses.begin(), out.hypotheses.end(),
                   [](const decode::Hypothesis& a, const decode::Hypothesis& b) {
                     return *a.rescored > *b.rescored;
                   });
  return out;
}

}  // namespace isochron::rescore

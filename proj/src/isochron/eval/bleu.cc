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

#include "isochron/eval/bleu.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "isochron/common/error.h"
#include "isochron/eval/tokenizer_13a.h"

namespace isochron::eval {

namespace {

// N-grams as joined strings; '\x1f' cannot appear inside a 13a token.
std::map<std::string, int64_t> ngram_counts(
    const std::vector<std::string>& tokens, size_t n) {
  std::map<std::string, int64_t> counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (size_t k = 1; k < n; ++k) {
      key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (size_t n = 0; n < 4; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hyp_len += other.hyp_len;
  ref_len += other.ref_len;
  return *this;
}

BleuStats sentence_stats(std::string_view hypothesis,
                         std::string_view reference) {
  const std::vector<std::string> hyp = tokenize_13a(hypothesis);
  const std::vector<std::string> ref = tokenize_13a(reference);
  BleuStats stats;
  stats.hyp_len = static_cast<int64_t>(hyp.size());
  stats.ref_len = static_cast<int64_t>(ref.size());
  for (size_t n = 1; n <= 4; ++n) {
    const auto hyp_ngrams = ngram_counts(hyp, n);
    const auto ref_ngrams = ngram_counts(ref, n);
    for (const auto& [gram, count] : hyp_ngrams) {
      stats.totals[n - 1] += count;
      const auto it = ref_ngrams.find(gram);
      if (it != ref_ngrams.end()) {
        stats.matches[n - 1] += std::min(count, it->second);
      }
    }
  }
  return stats;
}

double bleu_from_stats(const BleuStats& stats) {
  if (stats.hyp_len == 0) return 0.0;
  double log_sum = 0.0;
  for (size_t n = 0; n < 4; ++n) {
    const double precision =
        stats.totals[n] > 0 ? static_cast<double>(stats.matches[n]) /
                                  static_cast<double>(stats.totals[n])
                            : 0.0;
    log_sum += std::log(precision > 0.0 ? precision : 1e-9);
  }
  const double bp =
      stats.hyp_len > stats.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(stats.ref_len) /
                               static_cast<double>(stats.hyp_len));
  return bp * std::exp(log_sum / 4.0) * 100.0;
}

double bleu(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references) {
  ISO_CHECK_ARG(hypotheses.size() == references.size(),
                "bleu: " << hypotheses.size() << " hypotheses vs "
                         << references.size() << " references");
  ISO_CHECK_ARG(!hypotheses.empty(), "bleu: empty corpus");
  BleuStats stats;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    stats += sentence_stats(hypotheses[i], references[i]);
  }
  return bleu_from_stats(stats);
}

}  // namespace isochron::eval

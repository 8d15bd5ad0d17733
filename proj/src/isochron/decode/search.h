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

#ifndef ISOCHRON_DECODE_SEARCH_H_
#define ISOCHRON_DECODE_SEARCH_H_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isochron/data/vocab.h"
#include "isochron/model/model.h"
#include "isochron/model/session.h"

namespace isochron::decode {

struct SearchParams {
  int beam_size = 5;
  double alpha_lp = 0.5;  // length-penalty exponent
  double beta_cp = 0.0;   // coverage-penalty weight
  int max_steps = 256;    // generated tokens before EOS is forced
  int nbest = 1;
};

// Throws UsageError listing every violated constraint.
void validate(const SearchParams& params);

struct Hypothesis {
  std::vector<int> token_ids;  // BOS ... EOS
  std::string text;            // detokenized target
  double sum_logprob = 0.0;    // sum of step log-probs incl. EOS
  double score = 0.0;          // sum_logprob / LP + CP
  int64_t char_len = 0;        // char_length(text)
  bool forced_eos = false;     // EOS was imposed, not predicted
  // Combined value attached by a rescoring pass; unset for raw search output.
  std::optional<double> rescored;
};

struct NBestList {
  std::string source;
  int64_t source_chars = 0;
  std::vector<Hypothesis> hypotheses;  // sorted by score descending
};

// Scoring backend for the searches. A session holds one partial hypothesis;
// the constructor of a concrete session feeds BOS, append() extends by one
// token. Searches fork hypotheses via clone().
class ScoringSession {
 public:
  virtual ~ScoringSession() = default;
  virtual std::unique_ptr<ScoringSession> clone() const = 0;
  virtual void append(int token_id) = 0;
  // log P(token | prefix) for every vocab id, for the newest position.
  virtual std::vector<double> log_probs() const = 0;
  // Cross-attention of the newest position over source positions; empty when
  // the backend has no attention (table-driven scorers).
  virtual std::vector<float> attention_row() const = 0;
  // True when the prefix cannot grow further (e.g. model max_len reached).
  virtual bool exhausted() const = 0;
};

// Adapts an incremental model decoder to the search interface.
class ModelScoringSession final : public ScoringSession {
 public:
  ModelScoringSession(const model::ModelState& state,
                      num::Tensor encoder_states,
                      std::optional<data::Verbosity> verbosity);

  std::unique_ptr<ScoringSession> clone() const override;
  void append(int token_id) override;
  std::vector<double> log_probs() const override;
  std::vector<float> attention_row() const override;
  bool exhausted() const override;

 private:
  model::DecoderSession session_;
  int64_t max_len_;
};

// Length penalty of Eq.-style normalization: (5 + len)^alpha / 6^alpha,
// where len counts decoded tokens excluding BOS and including EOS.
double length_penalty(int64_t target_len, double alpha_lp);

// Coverage penalty from accumulated per-source-position attention masses:
// beta * sum_j log(min(mass_j, 1)), which is <= 0 and exactly 0 once every
// position has gathered mass >= 1.
double coverage_penalty_from_masses(std::span<const double> masses,
                                    double beta_cp);

// Same penalty over a row-major [steps x source_len] attention matrix whose
// rows are probability distributions (validated to 1 +- 1e-4). Zero when
// beta is zero, still validating the rows.
double coverage_penalty(std::span<const float> attention, int64_t steps,
                        int64_t source_len, double beta_cp);

// Beam search over a scoring session. Each step ranks all one-token
// extensions of the open set by sum_logprob (ties: earlier item, then lower
// token id) and keeps the beam_size best; kept extensions ending in EOS
// retire. The search runs until the open set empties or max_steps passes,
// stopping early only when beam_size hypotheses have finished and no open
// item could still reach the top nbest (sums only decrease and the length
// penalty only grows). beam_size=1 reproduces greedy decoding exactly.
// Hypotheses still open at the end are finished with EOS
// at its true log-probability, flagged forced unless EOS was already the
// top next-token choice. Finished hypotheses score
// S = sum_logprob / LP(len) + CP and the top nbest are returned sorted by
// score descending, ties broken by shorter sequence then lexicographic ids.
// PAD, BOS and the verbosity ids are never proposed; UNK is a normal token.
// Coverage masses accumulate one attention row per prefix position,
// including BOS.
std::vector<Hypothesis> search_nbest(const ScoringSession& root,
                                     const data::Vocabulary& vocab,
                                     const SearchParams& params);

// Greedy decoding that stops before the detokenized text would exceed
// char_budget; EOS is then emitted with its true log-probability and the
// hypothesis is flagged forced unless EOS was the natural choice. Scores use
// alpha_lp = 0 and beta_cp = 0, so score == sum_logprob.
Hypothesis truncate_decode_session(const ScoringSession& root,
                                   const data::Vocabulary& vocab,
                                   int64_t char_budget, int max_steps);

// Model-level wrappers: tokenize the source (prepending the verbosity token
// for the prepend variants), encode once, then run the session search.
NBestList beam_search(const model::ModelState& state,
                      const data::Vocabulary& vocab, const std::string& source,
                      std::optional<data::Verbosity> verbosity,
                      const SearchParams& params);

Hypothesis greedy_decode(const model::ModelState& state,
                         const data::Vocabulary& vocab,
                         const std::string& source,
                         std::optional<data::Verbosity> verbosity,
                         int max_steps = 256);

Hypothesis truncate_decode(const model::ModelState& state,
                           const data::Vocabulary& vocab,
                           const std::string& source,
                           std::optional<data::Verbosity> verbosity,
                           int64_t char_budget, int max_steps = 256);

}  // namespace isochron::decode

#endif  // ISOCHRON_DECODE_SEARCH_H_

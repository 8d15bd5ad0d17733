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

#include "isochron/decode/search.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "isochron/common/error.h"
#include "isochron/data/unicode.h"
#include "isochron/model/config.h"

namespace isochron::decode {

namespace {

constexpr double kAttentionRowTol = 1e-4;

// Candidate tokens are EOS, UNK and the regular vocabulary; PAD, BOS and the
// verbosity ids are never proposed.
bool proposable(int id) {
  if (id == data::kEosId || id == data::kUnkId) return true;
  return !data::Vocabulary::is_reserved(id);
}

double attention_row_sum(std::span<const float> row) {
  double s = 0.0;
  for (float v : row) s += v;
  return s;
}

// One open beam entry. `tokens` starts with BOS; `log_probs` is the
// distribution at the newest prefix position; `col_mass` holds accumulated
// attention column masses, one row per prefix position.
struct BeamItem {
  std::unique_ptr<ScoringSession> session;
  std::vector<int> tokens;
  double sum_logprob = 0.0;
  std::vector<double> log_probs;
  std::vector<double> col_mass;
};

// Folds the newest attention row into the per-column masses. Only needed
// when the coverage penalty is active; rows are validated here so malformed
// attention fails loudly during search, not at scoring time.
void accumulate_attention(BeamItem& item, double beta_cp) {
  if (beta_cp == 0.0) return;
  const std::vector<float> row = item.session->attention_row();
  if (row.empty()) return;
  const double sum = attention_row_sum(row);
  ISO_CHECK_ARG(std::abs(sum - 1.0) <= kAttentionRowTol,
                "coverage penalty: attention row sums to "
                    << sum << ", expected 1 +- " << kAttentionRowTol);
  if (item.col_mass.empty()) item.col_mass.resize(row.size(), 0.0);
  ISO_CHECK_ARG(item.col_mass.size() == row.size(),
                "coverage penalty: attention row length changed from "
                    << item.col_mass.size() << " to " << row.size());
  for (size_t j = 0; j < row.size(); ++j) {
    item.col_mass[j] += static_cast<double>(row[j]);
  }
}

Hypothesis finish_item(const BeamItem& item, double eos_sum, bool forced,
                       const data::Vocabulary& vocab,
                       const SearchParams& params) {
  Hypothesis h;
  h.token_ids = item.tokens;
  h.token_ids.push_back(data::kEosId);
  h.sum_logprob = eos_sum;
  h.forced_eos = forced;
  h.text = vocab.detokenize(h.token_ids);
  h.char_len = data::char_length(h.text);
  const int64_t target_len = static_cast<int64_t>(h.token_ids.size()) - 1;
  h.score = eos_sum / length_penalty(target_len, params.alpha_lp) +
            coverage_penalty_from_masses(item.col_mass, params.beta_cp);
  return h;
}

// Whether EOS ties or beats every other proposable token, i.e. appending EOS
// agrees with the model's own next-token choice. Force-finished hypotheses
// with this property are not flagged: EOS was predicted, not imposed.
bool eos_is_argmax(const std::vector<double>& lp) {
  const double eos = lp[data::kEosId];
  for (size_t id = 0; id < lp.size(); ++id) {
    if (!proposable(static_cast<int>(id)) || id == data::kEosId) continue;
    if (lp[id] > eos) return false;
  }
  return true;
}

// Final ranking: score descending, then shorter sequence, then lexicographic
// token ids, so equal-score sets order deterministically.
bool hypothesis_order(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.token_ids.size() != b.token_ids.size())
    return a.token_ids.size() < b.token_ids.size();
  return a.token_ids < b.token_ids;
}

}  // namespace

void validate(const SearchParams& params) {
  std::vector<std::string> problems;
  if (params.beam_size < 1) problems.push_back("beam_size must be >= 1");
  if (params.nbest < 1) problems.push_back("nbest must be >= 1");
  if (params.nbest > params.beam_size)
    problems.push_back("nbest must not exceed beam_size");
  if (params.max_steps < 1) problems.push_back("max_steps must be >= 1");
  if (!(params.alpha_lp >= 0.0))
    problems.push_back("alpha_lp must be >= 0");
  if (!(params.beta_cp >= 0.0)) problems.push_back("beta_cp must be >= 0");
  if (problems.empty()) return;
  std::string msg = "invalid search parameters:";
  for (const auto& p : problems) {
    msg += "\n  - ";
    msg += p;
  }
  throw UsageError(msg);
}

double length_penalty(int64_t target_len, double alpha_lp) {
  ISO_CHECK_ARG(target_len >= 1,
                "length_penalty: target length " << target_len << " < 1");
  ISO_CHECK_ARG(alpha_lp >= 0.0,
                "length_penalty: alpha " << alpha_lp << " < 0");
  return std::pow(5.0 + static_cast<double>(target_len), alpha_lp) /
         std::pow(6.0, alpha_lp);
}

double coverage_penalty_from_masses(std::span<const double> masses,
                                    double beta_cp) {
  ISO_CHECK_ARG(beta_cp >= 0.0,
                "coverage_penalty: beta " << beta_cp << " < 0");
  if (beta_cp == 0.0) return 0.0;
  double cp = 0.0;
  for (double m : masses) cp += std::log(std::min(m, 1.0));
  return beta_cp * cp;
}

double coverage_penalty(std::span<const float> attention, int64_t steps,
                        int64_t source_len, double beta_cp) {
  ISO_CHECK_ARG(steps >= 0, "coverage_penalty: steps " << steps << " < 0");
  ISO_CHECK_ARG(beta_cp >= 0.0,
                "coverage_penalty: beta " << beta_cp << " < 0");
  if (steps > 0) {
    ISO_CHECK_ARG(source_len >= 1, "coverage_penalty: source length "
                                       << source_len << " < 1");
  }
  ISO_CHECK_ARG(
      static_cast<int64_t>(attention.size()) == steps * source_len,
      "coverage_penalty: attention has " << attention.size()
                                         << " entries, expected " << steps
                                         << " x " << source_len);
  std::vector<double> masses(static_cast<size_t>(source_len), 0.0);
  for (int64_t t = 0; t < steps; ++t) {
    const std::span<const float> row =
        attention.subspan(static_cast<size_t>(t * source_len),
                          static_cast<size_t>(source_len));
    const double sum = attention_row_sum(row);
    ISO_CHECK_ARG(std::abs(sum - 1.0) <= kAttentionRowTol,
                  "coverage_penalty: attention row " << t << " sums to " << sum
                                                     << ", expected 1 +- "
                                                     << kAttentionRowTol);
    for (int64_t j = 0; j < source_len; ++j) {
      masses[static_cast<size_t>(j)] += static_cast<double>(row[j]);
    }
  }
  return coverage_penalty_from_masses(masses, beta_cp);
}

std::vector<Hypothesis> search_nbest(const ScoringSession& root,
                                     const data::Vocabulary& vocab,
                                     const SearchParams& params) {
  validate(params);

  std::vector<Hypothesis> finished;
  std::vector<BeamItem> open;
  {
    BeamItem r;
    r.session = root.clone();
    r.tokens = {data::kBosId};
    r.log_probs = r.session->log_probs();
    ISO_CHECK_ARG(static_cast<int>(r.log_probs.size()) == vocab.size(),
                  "search: scorer returned " << r.log_probs.size()
                                             << " log-probs for a vocabulary "
                                                "of "
                                             << vocab.size());
    accumulate_attention(r, params.beta_cp);
    open.push_back(std::move(r));
  }

  struct Cand {
    size_t item;
    int token;
    double sum;
  };

  const size_t beam = static_cast<size_t>(params.beam_size);
  const auto force_finish = [&](const BeamItem& item) {
    finished.push_back(
        finish_item(item, item.sum_logprob + item.log_probs[data::kEosId],
                    /*forced=*/!eos_is_argmax(item.log_probs), vocab, params));
  };

  // Optimistic bound for any open item: sums only decrease, the length
  // penalty only grows with length, and the coverage penalty is never
  // positive, so no extension of an item can score above sum / LP(longest).
  const double lp_longest =
      length_penalty(static_cast<int64_t>(params.max_steps) + 1,
                     params.alpha_lp);
  const auto no_open_item_can_improve = [&]() {
    if (finished.size() < static_cast<size_t>(params.nbest)) return false;
    std::vector<double> scores;
    scores.reserve(finished.size());
    for (const Hypothesis& h : finished) scores.push_back(h.score);
    std::nth_element(scores.begin(),
                     scores.begin() + (params.nbest - 1), scores.end(),
                     std::greater<>());
    const double nth = scores[static_cast<size_t>(params.nbest) - 1];
    for (const BeamItem& item : open) {
      const double optimistic =
          item.sum_logprob <= 0.0 ? item.sum_logprob / lp_longest
                                  : item.sum_logprob;
      if (optimistic >= nth) return false;
    }
    return true;
  };

  for (int step = 0; step < params.max_steps && !open.empty(); ++step) {
    // Items that cannot grow retire with EOS at its true probability.
    std::vector<BeamItem> live;
    live.reserve(open.size());
    for (BeamItem& item : open) {
      if (item.session->exhausted()) {
        force_finish(item);
      } else {
        live.push_back(std::move(item));
      }
    }
    open = std::move(live);
    if (open.empty()) break;

    std::vector<Cand> cands;
    cands.reserve(open.size() * static_cast<size_t>(vocab.size()));
    std::vector<BeamItem> expandable;
    expandable.reserve(open.size());
    for (BeamItem& item : open) {
      const size_t idx = expandable.size();
      size_t added = 0;
      for (int id = 0; id < vocab.size(); ++id) {
        if (!proposable(id)) continue;
        const double lp = item.log_probs[static_cast<size_t>(id)];
        if (lp == -std::numeric_limits<double>::infinity()) continue;
        cands.push_back(Cand{idx, id, item.sum_logprob + lp});
        ++added;
      }
      if (added == 0) {
        // Degenerate distribution with no finite candidate: finish as is.
        force_finish(item);
      } else {
        expandable.push_back(std::move(item));
      }
    }
    open = std::move(expandable);
    if (open.empty()) break;

    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.sum != b.sum) return a.sum > b.sum;
      if (a.item != b.item) return a.item < b.item;
      return a.token < b.token;
    });

    // Full-width selection every step: EOS retirements do not narrow later
    // steps, they only count toward the stop condition below.
    const size_t keep = std::min(beam, cands.size());

    // Count how many kept extensions each item contributes so its session
    // can be moved into its last extension instead of cloned.
    std::vector<size_t> uses(open.size(), 0);
    for (size_t c = 0; c < keep; ++c) {
      if (cands[c].token != data::kEosId) ++uses[cands[c].item];
    }

    std::vector<BeamItem> next;
    next.reserve(keep);
    for (size_t c = 0; c < keep; ++c) {
      const Cand& cand = cands[c];
      BeamItem& parent = open[cand.item];
      if (cand.token == data::kEosId) {
        finished.push_back(
            finish_item(parent, cand.sum, /*forced=*/false, vocab, params));
        continue;
      }
      BeamItem child;
      if (--uses[cand.item] == 0) {
        child.session = std::move(parent.session);
      } else {
        child.session = parent.session->clone();
      }
      child.tokens = parent.tokens;
      child.tokens.push_back(cand.token);
      child.sum_logprob = cand.sum;
      child.col_mass = parent.col_mass;
      child.session->append(cand.token);
      child.log_probs = child.session->log_probs();
      accumulate_attention(child, params.beta_cp);
      next.push_back(std::move(child));
    }
    open = std::move(next);
    if (finished.size() >= beam && no_open_item_can_improve()) {
      // The top nbest cannot change anymore; the open partials are junk.
      open.clear();
      break;
    }
  }

  // Anything still open ran out of steps: force EOS at its true probability.
  for (const BeamItem& item : open) force_finish(item);

  ISO_CHECK(!finished.empty(), "search produced no hypotheses");
  std::sort(finished.begin(), finished.end(), hypothesis_order);
  if (finished.size() > static_cast<size_t>(params.nbest)) {
    finished.resize(static_cast<size_t>(params.nbest));
  }
  return finished;
}

Hypothesis truncate_decode_session(const ScoringSession& root,
                                   const data::Vocabulary& vocab,
                                   int64_t char_budget, int max_steps) {
  ISO_CHECK_ARG(char_budget >= 0,
                "truncate decode: char budget " << char_budget << " < 0");
  ISO_CHECK_ARG(max_steps >= 1,
                "truncate decode: max_steps " << max_steps << " < 1");

  std::unique_ptr<ScoringSession> session = root.clone();
  Hypothesis h;
  h.token_ids = {data::kBosId};
  int64_t chars = 0;
  for (int step = 0;; ++step) {
    const std::vector<double> lp = session->log_probs();
    ISO_CHECK_ARG(static_cast<int>(lp.size()) == vocab.size(),
                  "search: scorer returned " << lp.size()
                                             << " log-probs for a vocabulary "
                                                "of "
                                             << vocab.size());
    // Greedy choice over proposable tokens; ties take the lowest id, and
    // EOS (the lowest proposable id) is the starting point.
    int best = data::kEosId;
    double best_lp = lp[data::kEosId];
    for (int id = 0; id < vocab.size(); ++id) {
      if (!proposable(id) || id == data::kEosId) continue;
      if (lp[static_cast<size_t>(id)] > best_lp) {
        best = id;
        best_lp = lp[static_cast<size_t>(id)];
      }
    }
    if (best != data::kEosId) {
      const int one[] = {best};
      const std::string piece = vocab.detokenize(one);
      const int64_t piece_chars = data::char_length(piece);
      if (step < max_steps && !session->exhausted() &&
          chars + piece_chars <= char_budget) {
        session->append(best);
        h.token_ids.push_back(best);
        h.sum_logprob += best_lp;
        h.text += piece;
        chars += piece_chars;
        continue;
      }
      h.forced_eos = true;
    }
    h.sum_logprob += lp[data::kEosId];
    break;
  }
  h.token_ids.push_back(data::kEosId);
  h.char_len = data::char_length(h.text);
  h.score = h.sum_logprob;  // alpha_lp = 0, beta_cp = 0
  return h;
}

ModelScoringSession::ModelScoringSession(
    const model::ModelState& state, num::Tensor encoder_states,
    std::optional<data::Verbosity> verbosity)
    : session_(state, std::move(encoder_states), verbosity),
      max_len_(state.config().max_len) {}

std::unique_ptr<ScoringSession> ModelScoringSession::clone() const {
  return std::unique_ptr<ScoringSession>(new ModelScoringSession(*this));
}

void ModelScoringSession::append(int token_id) { session_.append(token_id); }

std::vector<double> ModelScoringSession::log_probs() const {
  return session_.log_probs();
}

std::vector<float> ModelScoringSession::attention_row() const {
  return session_.attention_row();
}

bool ModelScoringSession::exhausted() const {
  return static_cast<int64_t>(session_.prefix().size()) >= max_len_;
}

namespace {

ModelScoringSession make_root(const model::ModelState& state,
                              const data::Vocabulary& vocab,
                              const std::string& source,
                              std::optional<data::Verbosity> verbosity) {
  std::vector<int> ids = vocab.tokenize(source);
  if (model::variant_prepends_token(state.config().variant)) {
    ISO_CHECK_ARG(verbosity.has_value(),
                  "decode: variant " << model::to_string(state.config().variant)
                                     << " requires a verbosity class");
    ids.insert(ids.begin(), data::verbosity_token_id(*verbosity));
  }
  num::Tensor enc = state.encode(ids, verbosity, /*train_mode=*/false);
  return ModelScoringSession(state, std::move(enc), verbosity);
}

}  // namespace

NBestList beam_search(const model::ModelState& state,
                      const data::Vocabulary& vocab, const std::string& source,
                      std::optional<data::Verbosity> verbosity,
                      const SearchParams& params) {
  validate(params);
  const ModelScoringSession root = make_root(state, vocab, source, verbosity);
  NBestList out;
  out.source = source;
  out.source_chars = data::char_length(source);
  out.hypotheses = search_nbest(root, vocab, params);
  return out;
}

Hypothesis greedy_decode(const model::ModelState& state,
                         const data::Vocabulary& vocab,
                         const std::string& source,
                         std::optional<data::Verbosity> verbosity,
                         int max_steps) {
  const ModelScoringSession root = make_root(state, vocab, source, verbosity);
  return truncate_decode_session(
      root, vocab, std::numeric_limits<int64_t>::max(), max_steps);
}

Hypothesis truncate_decode(const model::ModelState& state,
                           const data::Vocabulary& vocab,
                           const std::string& source,
                           std::optional<data::Verbosity> verbosity,
                           int64_t char_budget, int max_steps) {
  const ModelScoringSession root = make_root(state, vocab, source, verbosity);
  return truncate_decode_session(root, vocab, char_budget, max_steps);
}

}  // namespace isochron::decode

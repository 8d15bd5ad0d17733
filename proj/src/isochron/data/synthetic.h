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

#ifndef ISOCHRON_DATA_SYNTHETIC_H_
#define ISOCHRON_DATA_SYNTHETIC_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "isochron/data/corpus.h"

namespace isochron::data {

// Recipe for a synthetic parallel corpus. Source sentences are len_min..
// len_max symbols joined by single spaces; the target is the per-symbol
// expansion for the example's class, words joined by single spaces. The
// expansion table is fixed per (symbol, class), so the class of an example
// is decided by construction and the classifier agrees except for rare
// draws at the shortest lengths.
struct SyntheticSpec {
  struct Expansion {
    std::string symbol;
    // Target word per class, indexed by Verbosity (Short, Normal, Long).
    std::array<std::string, kNumVerbosityClasses> target;
  };

  int alphabet_size = 0;
  int len_min = 0;  // words per source sentence, inclusive range
  int len_max = 0;
  std::vector<Expansion> expansion;  // sorted by symbol, one per alphabet entry
  int corpus_size = 0;
  uint64_t seed = 0;

  // Mean target-word length per class; Short < Normal < Long is required so
  // the expected length ratios order correctly.
  std::array<double, kNumVerbosityClasses> mean_expansion_length() const;
};

// Throws ValidationError listing every problem.
void validate(const SyntheticSpec& spec);

// JSON keys: alphabet_size, len_min, len_max, expansion (object keyed by
// symbol, values keyed by class name), corpus_size, seed.
nlohmann::json to_json(const SyntheticSpec& spec);
SyntheticSpec spec_from_json(const nlohmann::json& j);

struct SyntheticCorpus {
  // Every example carries the classifier's verdict on its own text.
  std::vector<ParallelExample> examples;
  // The class each example was generated for, aligned with examples.
  std::vector<Verbosity> intended;
  // Fraction of examples whose stored class equals the intended one.
  double intended_agreement = 0.0;
};

// Deterministic given spec.seed. Intended classes are drawn uniformly, so
// class proportions are balanced up to sampling noise.
SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

// Desk-scale profiles: 12 doubled-letter symbols, sentences of 11..16 words,
// target words over s..z. The generic and in-domain alphabets overlap on
// g..l but expand them differently.
SyntheticSpec desk_generic_spec(uint64_t seed);    // symbols aa..ll, 3500 pairs
SyntheticSpec desk_in_domain_spec(uint64_t seed);  // symbols gg..rr, 3000 pairs

}  // namespace isochron::data

#endif  // ISOCHRON_DATA_SYNTHETIC_H_

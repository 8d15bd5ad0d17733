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

#include "isochron/data/synthetic.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "isochron/common/error.h"
#include "isochron/common/rng.h"
#include "isochron/data/unicode.h"

namespace isochron::data {
namespace {

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

void check_word(const std::string& word, const std::string& what,
                std::vector<std::string>& problems, bool limit_length) {
  if (word.empty()) {
    problems.push_back(what + " is empty");
    return;
  }
  if (has_whitespace(word)) {
    problems.push_back(what + " contains whitespace");
    return;
  }
  try {
    const int64_t len = char_length(word);
    if (limit_length && (len < 1 || len > 3)) {
      std::ostringstream oss;
      oss << what << " must be 1..3 characters, got " << len;
      problems.push_back(oss.str());
    }
  } catch (const DataError& e) {
    problems.push_back(what + ": " + e.what());
  }
}

}  // namespace

std::array<double, kNumVerbosityClasses> SyntheticSpec::mean_expansion_length()
    const {
  std::array<double, kNumVerbosityClasses> means{};
  if (expansion.empty()) return means;
  for (const auto& e : expansion) {
    for (int c = 0; c < kNumVerbosityClasses; ++c) {
      means[static_cast<size_t>(c)] +=
          static_cast<double>(char_length(e.target[static_cast<size_t>(c)]));
    }
  }
  for (auto& m : means) m /= static_cast<double>(expansion.size());
  return means;
}

void validate(const SyntheticSpec& spec) {
  std::vector<std::string> problems;
  if (spec.alphabet_size < 1) problems.push_back("alphabet_size must be >= 1");
  if (spec.len_min < 1) problems.push_back("len_min must be >= 1");
  if (spec.len_max < spec.len_min) problems.push_back("len_max must be >= len_min");
  if (spec.corpus_size < 1) problems.push_back("corpus_size must be >= 1");
  if (static_cast<int>(spec.expansion.size()) != spec.alphabet_size) {
    std::ostringstream oss;
    oss << "expansion table has " << spec.expansion.size()
        << " entries, expected alphabet_size = " << spec.alphabet_size;
    problems.push_back(oss.str());
  }

  std::string prev_symbol;
  for (size_t i = 0; i < spec.expansion.size(); ++i) {
    const auto& e = spec.expansion[i];
    const std::string where = "expansion[" + std::to_string(i) + "]";
    check_word(e.symbol, where + ".symbol", problems, /*limit_length=*/false);
    if (i > 0 && !(prev_symbol < e.symbol)) {
      problems.push_back(where + ".symbol \"" + e.symbol +
                         "\" is not strictly after \"" + prev_symbol + "\"");
    }
    prev_symbol = e.symbol;
    for (int c = 0; c < kNumVerbosityClasses; ++c) {
      check_word(e.target[static_cast<size_t>(c)],
                 where + "." + std::string(to_string(static_cast<Verbosity>(c))),
                 problems, /*limit_length=*/true);
    }
  }

  if (problems.empty()) {
    const auto means = spec.mean_expansion_length();
    if (!(means[0] < means[1] && means[1] < means[2])) {
      std::ostringstream oss;
      oss << "mean expansion lengths must order Short < Normal < Long, got "
          << means[0] << " / " << means[1] << " / " << means[2];
      problems.push_back(oss.str());
    }
  }

  if (!problems.empty()) throw ValidationError(problems);
}

nlohmann::json to_json(const SyntheticSpec& spec) {
  nlohmann::json exp = nlohmann::json::object();
  for (const auto& e : spec.expansion) {
    exp[e.symbol] = {{"Short", e.target[0]},
                     {"Normal", e.target[1]},
                     {"Long", e.target[2]}};
  }
  return {{"alphabet_size", spec.alphabet_size},
          {"len_min", spec.len_min},
          {"len_max", spec.len_max},
          {"expansion", exp},
          {"corpus_size", spec.corpus_size},
          {"seed", spec.seed}};
}

SyntheticSpec spec_from_json(const nlohmann::json& j) {
  ISO_CHECK_DATA(j.is_object(), "synthetic spec JSON must be an object");
  for (const char* key :
       {"alphabet_size", "len_min", "len_max", "expansion", "corpus_size", "seed"}) {
    ISO_CHECK_DATA(j.contains(key), "synthetic spec missing key \"" << key << "\"");
  }
  SyntheticSpec spec;
  try {
    spec.alphabet_size = j.at("alphabet_size").get<int>();
    spec.len_min = j.at("len_min").get<int>();
    spec.len_max = j.at("len_max").get<int>();
    spec.corpus_size = j.at("corpus_size").get<int>();
    spec.seed = j.at("seed").get<uint64_t>();
    const auto& exp = j.at("expansion");
    ISO_CHECK_DATA(exp.is_object(), "synthetic spec \"expansion\" must be an object");
    for (const auto& [symbol, targets] : exp.items()) {
      SyntheticSpec::Expansion e;
      e.symbol = symbol;
      ISO_CHECK_DATA(targets.is_object(),
                     "expansion for \"" << symbol << "\" must be an object");
      for (int c = 0; c < kNumVerbosityClasses; ++c) {
        const std::string name(to_string(static_cast<Verbosity>(c)));
        ISO_CHECK_DATA(targets.contains(name), "expansion for \""
                                                   << symbol << "\" missing class \""
                                                   << name << "\"");
        e.target[static_cast<size_t>(c)] = targets.at(name).get<std::string>();
      }
      spec.expansion.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    ISO_CHECK_DATA(false, "synthetic spec JSON: " << e.what());
  }
  // nlohmann object keys iterate in sorted order, which is the canonical
  // expansion order; validate() rechecks.
  return spec;
}

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  validate(spec);
  RandomStream rng(derive_seed(spec.seed, "synthetic"));
  SyntheticCorpus corpus;
  corpus.examples.reserve(static_cast<size_t>(spec.corpus_size));
  corpus.intended.reserve(static_cast<size_t>(spec.corpus_size));
  int64_t agree = 0;
  for (int i = 0; i < spec.corpus_size; ++i) {
    const auto intended = static_cast<Verbosity>(rng.uniform_int(0, 2));
    const auto words = rng.uniform_int(spec.len_min, spec.len_max);
    std::string source;
    std::string target;
    for (int64_t w = 0; w < words; ++w) {
      const auto& e = spec.expansion[static_cast<size_t>(
          rng.uniform_int(0, spec.alphabet_size - 1))];
      if (w > 0) {
        source += ' ';
        target += ' ';
      }
      source += e.symbol;
      target += e.target[static_cast<size_t>(intended)];
    }
    ParallelExample ex;
    ex.id = i;
    ex.source = std::move(source);
    ex.target = std::move(target);
    ex.verbosity = classify_verbosity(ex.source, ex.target);
    if (*ex.verbosity == intended) ++agree;
    corpus.examples.push_back(std::move(ex));
    corpus.intended.push_back(intended);
  }
  corpus.intended_agreement =
      static_cast<double>(agree) / static_cast<double>(spec.corpus_size);
  return corpus;
}

namespace {

SyntheticSpec desk_spec(char first_symbol, int corpus_size, uint64_t seed,
                        std::string_view table_stream) {
  constexpr int kAlphabet = 12;
  constexpr int kTargetLetters = 8;  // s..z
  SyntheticSpec spec;
  spec.alphabet_size = kAlphabet;
  spec.len_min = 11;
  spec.len_max = 16;
  spec.corpus_size = corpus_size;
  spec.seed = seed;

  RandomStream rng(derive_seed(seed, table_stream));
  // Fixed class proportions over the alphabet: Short expansions are 1 or 2
  // characters (half each, so sentence-level LR ~ 0.83), Normal is always 2
  // (LR exactly 1.0 against 2-character source words), Long is 3 for 8 of 12
  // symbols (LR ~ 1.22). Which symbol gets which length is shuffled.
  std::vector<int> short_len, long_len;
  for (int i = 0; i < kAlphabet; ++i) {
    short_len.push_back(i < kAlphabet / 2 ? 1 : 2);
    long_len.push_back(i < 8 ? 3 : 2);
  }
  rng.shuffle(short_len);
  rng.shuffle(long_len);

  for (int i = 0; i < kAlphabet; ++i) {
    SyntheticSpec::Expansion e;
    e.symbol = std::string(2, static_cast<char>(first_symbol + i));
    const std::array<int, kNumVerbosityClasses> lens = {
        short_len[static_cast<size_t>(i)], 2, long_len[static_cast<size_t>(i)]};
    for (int c = 0; c < kNumVerbosityClasses; ++c) {
      std::string word;
      for (int k = 0; k < lens[static_cast<size_t>(c)]; ++k) {
        word += static_cast<char>('s' + rng.uniform_int(0, kTargetLetters - 1));
      }
      e.target[static_cast<size_t>(c)] = std::move(word);
    }
    spec.expansion.push_back(std::move(e));
  }
  validate(spec);
  return spec;
}

}  // namespace

SyntheticSpec desk_generic_spec(uint64_t seed) {
  return desk_spec('a', 3500, seed, "generic-table");
}

SyntheticSpec desk_in_domain_spec(uint64_t seed) {
  return desk_spec('g', 3000, seed, "in-domain-table");
}

}  // namespace isochron::data

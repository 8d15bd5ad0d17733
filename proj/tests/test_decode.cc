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

#include <doctest.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "isochron/common/error.h"
#include "isochron/data/unicode.h"
#include "isochron/data/vocab.h"
#include "isochron/decode/nbest.h"
#include "isochron/decode/search.h"
#include "isochron/model/config.h"
#include "isochron/model/model.h"
#include "isochron/numcore/ops.h"

namespace {

using isochron::DataError;
using isochron::UsageError;
namespace data = isochron::data;
namespace decode = isochron::decode;
namespace model = isochron::model;
namespace num = isochron::num;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

data::Vocabulary test_vocab() {
  return data::Vocabulary::from_characters(
      {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
}

model::ModelConfig test_config(model::Variant variant = model::Variant::Standard,
                               uint64_t seed = 7) {
  model::ModelConfig cfg;
  cfg.layers = 2;
  cfg.model_dim = 16;
  cfg.heads = 4;
  cfg.ffn_dim = 32;
  cfg.vocab_size = test_vocab().size();
  cfg.max_len = 32;
  cfg.variant = variant;
  cfg.seed = seed;
  return cfg;
}

// Scoring backend driven by a prefix-to-distribution function, for searches
// with exactly known probabilities. The prefix excludes BOS.
struct TableModel {
  int vocab_size = 0;
  std::function<std::vector<double>(const std::vector<int>&)> dist;
  std::function<std::vector<float>(const std::vector<int>&)> attention;
  int64_t max_tokens = std::numeric_limits<int64_t>::max();
};

class TableSession final : public decode::ScoringSession {
 public:
  explicit TableSession(std::shared_ptr<const TableModel> m)
      : model_(std::move(m)) {}

  std::unique_ptr<decode::ScoringSession> clone() const override {
    return std::make_unique<TableSession>(*this);
  }
  void append(int token_id) override { generated_.push_back(token_id); }
  std::vector<double> log_probs() const override {
    return model_->dist(generated_);
  }
  std::vector<float> attention_row() const override {
    if (!model_->attention) return {};
    return model_->attention(generated_);
  }
  bool exhausted() const override {
    return static_cast<int64_t>(generated_.size()) >= model_->max_tokens;
  }

 private:
  std::shared_ptr<const TableModel> model_;
  std::vector<int> generated_;
};

TableSession make_session(const TableModel& m) {
  return TableSession(std::make_shared<const TableModel>(m));
}

// Distributions listed as (id, probability); everything else gets -inf.
std::vector<double> logdist(
    int vocab, const std::vector<std::pair<int, double>>& probs) {
  std::vector<double> lp(static_cast<size_t>(vocab), kNegInf);
  for (const auto& [id, p] : probs) lp[static_cast<size_t>(id)] = std::log(p);
  return lp;
}

TableModel table_from(int vocab,
                      std::map<std::vector<int>, std::vector<double>> rows) {
  TableModel m;
  m.vocab_size = vocab;
  m.dist = [vocab, rows = std::move(rows)](const std::vector<int>& gen) {
    const auto it = rows.find(gen);
    if (it != rows.end()) return it->second;
    std::vector<double> lp(static_cast<size_t>(vocab), kNegInf);
    lp[data::kEosId] = 0.0;
    return lp;
  };
  return m;
}

// Seeded random distributions over EOS and the letter ids, reproducible per
// prefix; all probability moves to EOS once eos_at tokens were generated.
TableModel random_table(int vocab, uint64_t seed, int64_t eos_at) {
  TableModel m;
  m.vocab_size = vocab;
  m.dist = [vocab, seed, eos_at](const std::vector<int>& gen) {
    std::vector<double> lp(static_cast<size_t>(vocab), kNegInf);
    if (static_cast<int64_t>(gen.size()) >= eos_at) {
      lp[data::kEosId] = 0.0;
      return lp;
    }
    uint64_t h = seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull;
    for (int id : gen) {
      h = (h ^ static_cast<uint64_t>(id + 1)) * 0x100000001B3ull;
    }
    std::mt19937_64 rng(h);
    std::normal_distribution<double> gauss(0.0, 1.5);
    std::vector<int> support{data::kEosId};
    for (int id = data::kNumReserved; id < vocab; ++id) support.push_back(id);
    std::vector<double> raw(support.size());
    for (double& r : raw) r = gauss(rng);
    const double mx = *std::max_element(raw.begin(), raw.end());
    double z = 0.0;
    for (double r : raw) z += std::exp(r - mx);
    const double log_z = mx + std::log(z);
    for (size_t i = 0; i < support.size(); ++i) {
      lp[static_cast<size_t>(support[i])] = raw[i] - log_z;
    }
    return lp;
  };
  return m;
}

struct Enumerated {
  std::vector<int> token_ids;  // BOS ... EOS
  double sum = 0.0;
  double score = 0.0;
};

void enumerate_rec(const TableModel& m, std::vector<int>& gen, double sum,
                   double alpha, int64_t max_gen,
                   std::vector<Enumerated>& out) {
  const std::vector<double> lp = m.dist(gen);
  if (std::isfinite(lp[data::kEosId])) {
    Enumerated e;
    e.token_ids.push_back(data::kBosId);
    e.token_ids.insert(e.token_ids.end(), gen.begin(), gen.end());
    e.token_ids.push_back(data::kEosId);
    e.sum = sum + lp[data::kEosId];
    e.score = e.sum / decode::length_penalty(
                          static_cast<int64_t>(gen.size()) + 1, alpha);
    out.push_back(std::move(e));
  }
  if (static_cast<int64_t>(gen.size()) >= max_gen) return;
  for (int id = data::kNumReserved; id < m.vocab_size; ++id) {
    if (!std::isfinite(lp[static_cast<size_t>(id)])) continue;
    gen.push_back(id);
    enumerate_rec(m, gen, sum + lp[static_cast<size_t>(id)], alpha, max_gen,
                  out);
    gen.pop_back();
  }
}

// Every hypothesis of length <= max_gen, ranked like the search ranks.
std::vector<Enumerated> enumerate_all(const TableModel& m, double alpha,
                                      int64_t max_gen) {
  std::vector<Enumerated> out;
  std::vector<int> gen;
  enumerate_rec(m, gen, 0.0, alpha, max_gen, out);
  std::sort(out.begin(), out.end(), [](const Enumerated& a,
                                       const Enumerated& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.token_ids.size() != b.token_ids.size())
      return a.token_ids.size() < b.token_ids.size();
    return a.token_ids < b.token_ids;
  });
  return out;
}

std::filesystem::path fresh_temp_dir() {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("isochron_decode_" + std::to_string(getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("decode");

TEST_CASE("length penalty matches hand values") {
  CHECK(decode::length_penalty(1, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(decode::length_penalty(5, 0.5) ==
        doctest::Approx(std::sqrt(10.0 / 6.0)).epsilon(1e-12));
  CHECK(decode::length_penalty(5, 0.5) ==
        doctest::Approx(1.290994).epsilon(1e-6));
  CHECK(decode::length_penalty(1, 0.0) == 1.0);
  CHECK(decode::length_penalty(17, 0.0) == 1.0);
  CHECK(decode::length_penalty(997, 0.0) == 1.0);
  CHECK(decode::length_penalty(3, 1.0) == doctest::Approx(8.0 / 6.0));
  CHECK_THROWS_AS(decode::length_penalty(0, 0.5), UsageError);
  CHECK_THROWS_AS(decode::length_penalty(-2, 0.5), UsageError);
  CHECK_THROWS_AS(decode::length_penalty(4, -0.1), UsageError);
}

TEST_CASE("coverage penalty matches hand values") {
  SUBCASE("beta zero is exactly zero but rows are still validated") {
    const std::vector<float> ok = {0.5f, 0.5f, 0.25f, 0.75f};
    CHECK(decode::coverage_penalty(ok, 2, 2, 0.0) == 0.0);
    const std::vector<float> bad = {0.6f, 0.3f, 0.5f, 0.5f};
    CHECK_THROWS_AS(decode::coverage_penalty(bad, 2, 2, 0.0), UsageError);
  }
  SUBCASE("full coverage clamps to zero") {
    const std::vector<float> attn = {1.0f, 1.0f};  // 2 steps x 1 position
    CHECK(decode::coverage_penalty(attn, 2, 1, 0.7) == 0.0);
    const std::vector<float> wide(8, 0.5f);  // 4 steps x 2 positions
    CHECK(decode::coverage_penalty(wide, 4, 2, 1.3) == 0.0);
  }
  SUBCASE("column masses [1.0, 0.5] give log(0.5)") {
    const std::vector<double> masses = {1.0, 0.5};
    CHECK(decode::coverage_penalty_from_masses(masses, 1.0) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(decode::coverage_penalty_from_masses(masses, 1.0) ==
          doctest::Approx(-0.6931).epsilon(1e-4));
    CHECK(decode::coverage_penalty_from_masses(masses, 2.0) ==
          doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
    const std::vector<double> over = {2.5, 0.5};
    CHECK(decode::coverage_penalty_from_masses(over, 1.0) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
  }
  SUBCASE("penalty is never positive") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 2.5);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> masses(5);
      for (double& m : masses) m = u(rng);
      CHECK(decode::coverage_penalty_from_masses(masses, 0.8) <= 0.0);
    }
  }
  SUBCASE("empty masses contribute nothing") {
    CHECK(decode::coverage_penalty_from_masses({}, 1.0) == 0.0);
    CHECK(decode::coverage_penalty({}, 0, 0, 1.0) == 0.0);
    // Zero steps over a real source covers nothing: log(0) per column.
    CHECK(decode::coverage_penalty({}, 0, 3, 1.0) ==
          -std::numeric_limits<double>::infinity());
  }
  SUBCASE("malformed shapes and rows throw") {
    const std::vector<float> attn = {0.5f, 0.5f};
    CHECK_THROWS_AS(decode::coverage_penalty(attn, 2, 2, 1.0), UsageError);
    const std::vector<float> low = {0.6f, 0.3f};
    CHECK_THROWS_AS(decode::coverage_penalty(low, 1, 2, 1.0), UsageError);
    CHECK_THROWS_AS(decode::coverage_penalty(attn, 1, 2, -1.0), UsageError);
    CHECK_THROWS_AS(decode::coverage_penalty(attn, -1, 2, 1.0), UsageError);
  }
}

TEST_CASE("search parameter validation lists every problem") {
  decode::SearchParams ok;
  CHECK_NOTHROW(decode::validate(ok));

  decode::SearchParams bad;
  bad.beam_size = 0;
  bad.nbest = 0;
  bad.max_steps = 0;
  bad.alpha_lp = -0.5;
  bad.beta_cp = -1.0;
  try {
    decode::validate(bad);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("beam_size") != std::string::npos);
    CHECK(msg.find("nbest") != std::string::npos);
    CHECK(msg.find("max_steps") != std::string::npos);
    CHECK(msg.find("alpha_lp") != std::string::npos);
    CHECK(msg.find("beta_cp") != std::string::npos);
  }

  decode::SearchParams wide;
  wide.beam_size = 2;
  wide.nbest = 3;
  CHECK_THROWS_AS(decode::validate(wide), UsageError);
}

TEST_CASE("hand-built two-step search equals brute force and flips with alpha") {
  const data::Vocabulary vocab = data::Vocabulary::from_characters({"a", "b"});
  const int V = vocab.size();
  const int a = 7;
  const int b = 8;
  const TableModel table = table_from(
      V, {
             {{}, logdist(V, {{a, 0.5}, {b, 0.3}, {data::kEosId, 0.2}})},
             {{a}, logdist(V, {{a, 0.1}, {b, 0.2}, {data::kEosId, 0.7}})},
             {{b}, logdist(V, {{a, 0.45}, {b, 0.05}, {data::kEosId, 0.5}})},
         });
  const TableSession root = make_session(table);

  decode::SearchParams params;
  params.beam_size = 4;
  params.nbest = 4;
  params.alpha_lp = 0.5;
  params.max_steps = 8;

  const std::vector<decode::Hypothesis> got =
      decode::search_nbest(root, vocab, params);
  const std::vector<Enumerated> want = enumerate_all(table, 0.5, 2);
  REQUIRE(want.size() == 7);  // (), a, b, aa, ab, ba, bb
  REQUIRE(got.size() == 4);
  for (size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].token_ids == want[i].token_ids);
    CHECK(got[i].sum_logprob == doctest::Approx(want[i].sum).epsilon(1e-12));
    CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
    CHECK_FALSE(got[i].forced_eos);
  }

  // Hand ranking at alpha = 0.5: "a", "", "ba", "b".
  CHECK(got[0].text == "a");
  CHECK(got[1].text == "");
  CHECK(got[2].text == "ba");
  CHECK(got[3].text == "b");

  // At alpha = 0 the raw sums rank "b" above "ba": the pair flips.
  params.alpha_lp = 0.0;
  const std::vector<decode::Hypothesis> raw =
      decode::search_nbest(make_session(table), vocab, params);
  REQUIRE(raw.size() == 4);
  CHECK(raw[0].text == "a");
  CHECK(raw[1].text == "");
  CHECK(raw[2].text == "b");
  CHECK(raw[3].text == "ba");
  for (const decode::Hypothesis& h : raw) {
    CHECK(h.score == doctest::Approx(h.sum_logprob).epsilon(1e-12));
  }
}

TEST_CASE("wide beam equals exhaustive search on three-step models") {
  const data::Vocabulary vocab =
      data::Vocabulary::from_characters({"a", "b", "c", "d"});
  const int V = vocab.size();
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    CAPTURE(seed);
    const TableModel table = random_table(V, seed, 3);
    for (const double alpha : {0.0, 0.5}) {
      CAPTURE(alpha);
      decode::SearchParams params;
      params.beam_size = 100;  // >= 85 sequences: the beam is exhaustive
      params.nbest = 1;
      params.alpha_lp = alpha;
      params.max_steps = 10;
      const std::vector<decode::Hypothesis> got =
          decode::search_nbest(make_session(table), vocab, params);
      const std::vector<Enumerated> want = enumerate_all(table, alpha, 3);
      REQUIRE(want.size() == 85);
      REQUIRE(got.size() == 1);
      CHECK(got[0].token_ids == want[0].token_ids);
      CHECK(got[0].sum_logprob ==
            doctest::Approx(want[0].sum).epsilon(1e-9));
      CHECK(got[0].score == doctest::Approx(want[0].score).epsilon(1e-9));
    }
  }
}

TEST_CASE("beam size one reproduces greedy decoding") {
  const data::Vocabulary vocab =
      data::Vocabulary::from_characters({"a", "b", "c", "d", "e"});
  const int V = vocab.size();
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    CAPTURE(seed);
    // No forced-EOS row: some seeds stop naturally, others hit max_steps.
    const TableModel table =
        random_table(V, seed, std::numeric_limits<int64_t>::max());
    decode::SearchParams params;
    params.beam_size = 1;
    params.nbest = 1;
    params.alpha_lp = 0.0;
    params.max_steps = 12;
    const std::vector<decode::Hypothesis> beam =
        decode::search_nbest(make_session(table), vocab, params);
    const decode::Hypothesis greedy = decode::truncate_decode_session(
        make_session(table), vocab, std::numeric_limits<int64_t>::max(), 12);
    REQUIRE(beam.size() == 1);
    CHECK(beam[0].token_ids == greedy.token_ids);
    CHECK(beam[0].text == greedy.text);
    CHECK(beam[0].sum_logprob ==
          doctest::Approx(greedy.sum_logprob).epsilon(1e-12));
    CHECK(beam[0].forced_eos == greedy.forced_eos);
  }
}

TEST_CASE("wider beams never lower the best score on toy models") {
  const data::Vocabulary vocab =
      data::Vocabulary::from_characters({"a", "b", "c", "d", "e"});
  const int V = vocab.size();
  const int beams[] = {1, 2, 3, 5, 8, 16};
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    CAPTURE(seed);
    const TableModel table = random_table(V, seed, 4);
    double prev = -std::numeric_limits<double>::infinity();
    for (const int beam : beams) {
      CAPTURE(beam);
      decode::SearchParams params;
      params.beam_size = beam;
      params.nbest = 1;
      params.alpha_lp = 0.5;
      params.max_steps = 10;
      const std::vector<decode::Hypothesis> got =
          decode::search_nbest(make_session(table), vocab, params);
      REQUIRE(got.size() == 1);
      CHECK(got[0].score >= prev - 1e-12);
      prev = std::max(prev, got[0].score);
    }
  }
}

TEST_CASE("exact ties break by token id and ranking is deterministic") {
  const data::Vocabulary vocab = data::Vocabulary::from_characters({"a", "b"});
  const int V = vocab.size();
  const TableModel table = table_from(
      V, {{{}, logdist(V, {{7, 0.4}, {8, 0.4}, {data::kEosId, 0.2}})}});
  decode::SearchParams params;
  params.beam_size = 3;
  params.nbest = 3;
  params.alpha_lp = 0.0;
  params.max_steps = 4;
  for (int run = 0; run < 2; ++run) {
    const std::vector<decode::Hypothesis> got =
        decode::search_nbest(make_session(table), vocab, params);
    REQUIRE(got.size() == 3);
    // "a" and "b" tie on score; lexicographic ids put "a" first.
    CHECK(got[0].text == "a");
    CHECK(got[1].text == "b");
    CHECK(got[2].text == "");
    CHECK(got[0].score == got[1].score);
  }
}

TEST_CASE("n-best lists are sorted, unique, and within bounds") {
  const data::Vocabulary vocab =
      data::Vocabulary::from_characters({"a", "b", "c", "d"});
  const int V = vocab.size();
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    const TableModel table = random_table(V, seed, 5);
    decode::SearchParams params;
    params.beam_size = 5;
    params.nbest = 5;
    params.alpha_lp = 0.5;
    params.max_steps = 8;
    const std::vector<decode::Hypothesis> got =
        decode::search_nbest(make_session(table), vocab, params);
    REQUIRE(!got.empty());
    CHECK(got.size() <= 5);
    std::vector<std::vector<int>> seen;
    for (size_t i = 0; i < got.size(); ++i) {
      const decode::Hypothesis& h = got[i];
      REQUIRE(h.token_ids.size() >= 2);
      CHECK(h.token_ids.front() == data::kBosId);
      CHECK(h.token_ids.back() == data::kEosId);
      CHECK(h.sum_logprob <= 1e-12);
      CHECK(h.char_len == data::char_length(h.text));
      CHECK(h.text == vocab.detokenize(h.token_ids));
      if (i > 0) CHECK(got[i - 1].score >= h.score);
      seen.push_back(h.token_ids);
    }
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  }
}

TEST_CASE("truncate decoding follows the table exactly") {
  const data::Vocabulary vocab = data::Vocabulary::from_characters({"a", "b"});
  const int V = vocab.size();
  const TableModel table = table_from(
      V, {
             {{}, logdist(V, {{7, 0.6}, {data::kEosId, 0.4}})},
             {{7}, logdist(V, {{8, 0.9}, {data::kEosId, 0.1}})},
         });

  SUBCASE("zero budget emits only EOS") {
    const decode::Hypothesis h =
        decode::truncate_decode_session(make_session(table), vocab, 0, 16);
    CHECK(h.text == "");
    CHECK(h.char_len == 0);
    CHECK(h.token_ids == std::vector<int>{data::kBosId, data::kEosId});
    CHECK(h.forced_eos);
    CHECK(h.sum_logprob == doctest::Approx(std::log(0.4)).epsilon(1e-12));
    CHECK(h.score == h.sum_logprob);
  }
  SUBCASE("mid budget cuts with the true EOS probability") {
    const decode::Hypothesis h =
        decode::truncate_decode_session(make_session(table), vocab, 1, 16);
    CHECK(h.text == "a");
    CHECK(h.char_len == 1);
    CHECK(h.forced_eos);
    CHECK(h.sum_logprob ==
          doctest::Approx(std::log(0.6) + std::log(0.1)).epsilon(1e-12));
  }
  SUBCASE("large budget reaches the natural end") {
    for (const int64_t budget :
         {int64_t{2}, int64_t{50}, std::numeric_limits<int64_t>::max()}) {
      CAPTURE(budget);
      const decode::Hypothesis h = decode::truncate_decode_session(
          make_session(table), vocab, budget, 16);
      CHECK(h.text == "ab");
      CHECK(h.char_len == 2);
      CHECK_FALSE(h.forced_eos);
      CHECK(h.sum_logprob ==
            doctest::Approx(std::log(0.6) + std::log(0.9)).epsilon(1e-12));
    }
  }
  SUBCASE("negative budget is rejected") {
    CHECK_THROWS_AS(
        decode::truncate_decode_session(make_session(table), vocab, -1, 16),
        UsageError);
  }
}

TEST_CASE("model search scores are recomputable by teacher forcing") {
  const data::Vocabulary vocab = test_vocab();
  const model::ModelState state = model::ModelState::init(test_config());

  decode::SearchParams params;
  params.beam_size = 3;
  params.nbest = 3;
  params.alpha_lp = 0.5;
  params.max_steps = 20;
  const decode::NBestList out =
      decode::beam_search(state, vocab, "abc", std::nullopt, params);

  CHECK(out.source == "abc");
  CHECK(out.source_chars == 3);
  REQUIRE(!out.hypotheses.empty());
  const num::Tensor enc =
      state.encode(vocab.tokenize("abc"), std::nullopt, false);
  for (const decode::Hypothesis& h : out.hypotheses) {
    CAPTURE(h.text);
    REQUIRE(h.token_ids.size() >= 2);
    CHECK(h.token_ids.front() == data::kBosId);
    CHECK(h.token_ids.back() == data::kEosId);
    for (size_t i = 1; i + 1 < h.token_ids.size(); ++i) {
      CHECK(!data::Vocabulary::is_reserved(h.token_ids[i]));
    }
    const std::span<const int> prefix(h.token_ids.data(),
                                      h.token_ids.size() - 1);
    const model::DecodeResult r =
        state.decode_step(prefix, enc, std::nullopt, false);
    const int V = vocab.size();
    double sum = 0.0;
    for (size_t i = 0; i + 1 < h.token_ids.size(); ++i) {
      const std::vector<double> lp = num::log_softmax_vec(
          r.logits.data() + static_cast<size_t>(V) * i, static_cast<size_t>(V));
      sum += lp[static_cast<size_t>(h.token_ids[i + 1])];
    }
    CHECK(h.sum_logprob == doctest::Approx(sum).epsilon(1e-4));
    CHECK(std::abs(h.sum_logprob - sum) < 1e-4);
    const int64_t len = static_cast<int64_t>(h.token_ids.size()) - 1;
    CHECK(h.score ==
          doctest::Approx(h.sum_logprob / decode::length_penalty(len, 0.5))
              .epsilon(1e-12));
    CHECK(h.char_len == data::char_length(h.text));
    CHECK(h.text == vocab.detokenize(h.token_ids));
  }
}

TEST_CASE("coverage-active search scores match the matrix-form penalty") {
  const data::Vocabulary vocab = test_vocab();
  const model::ModelState state =
      model::ModelState::init(test_config(model::Variant::Standard, 23));

  decode::SearchParams params;
  params.beam_size = 3;
  params.nbest = 3;
  params.alpha_lp = 0.5;
  params.beta_cp = 0.4;
  params.max_steps = 16;
  const decode::NBestList out =
      decode::beam_search(state, vocab, "bcda", std::nullopt, params);

  const std::vector<int> src = vocab.tokenize("bcda");
  const num::Tensor enc = state.encode(src, std::nullopt, false);
  REQUIRE(!out.hypotheses.empty());
  for (const decode::Hypothesis& h : out.hypotheses) {
    CAPTURE(h.text);
    const std::span<const int> prefix(h.token_ids.data(),
                                      h.token_ids.size() - 1);
    const model::DecodeResult r =
        state.decode_step(prefix, enc, std::nullopt, false);
    const int64_t steps = static_cast<int64_t>(prefix.size());
    const double cp = decode::coverage_penalty(
        r.cross_attention, steps, static_cast<int64_t>(src.size()), 0.4);
    CHECK(cp <= 0.0);
    const int64_t len = static_cast<int64_t>(h.token_ids.size()) - 1;
    const double want =
        h.sum_logprob / decode::length_penalty(len, 0.5) + cp;
    CHECK(h.score == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("coverage with attention-free scorers degrades to zero") {
  const data::Vocabulary vocab = data::Vocabulary::from_characters({"a", "b"});
  const int V = vocab.size();
  const TableModel table = random_table(V, 3, 3);
  decode::SearchParams with_cp;
  with_cp.beam_size = 3;
  with_cp.nbest = 3;
  with_cp.alpha_lp = 0.5;
  with_cp.beta_cp = 0.9;
  with_cp.max_steps = 6;
  decode::SearchParams without_cp = with_cp;
  without_cp.beta_cp = 0.0;
  const std::vector<decode::Hypothesis> a =
      decode::search_nbest(make_session(table), vocab, with_cp);
  const std::vector<decode::Hypothesis> b =
      decode::search_nbest(make_session(table), vocab, without_cp);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].token_ids == b[i].token_ids);
    CHECK(a[i].score == doctest::Approx(b[i].score).epsilon(1e-12));
  }
}

TEST_CASE("malformed attention rows fail the search only when coverage is on") {
  const data::Vocabulary vocab = data::Vocabulary::from_characters({"a", "b"});
  const int V = vocab.size();
  TableModel table = random_table(V, 5, 2);
  table.attention = [](const std::vector<int>&) {
    return std::vector<float>{0.5f, 0.2f};  // sums to 0.7
  };
  decode::SearchParams params;
  params.beam_size = 2;
  params.nbest = 1;
  params.max_steps = 4;
  params.beta_cp = 0.5;
  CHECK_THROWS_AS(decode::search_nbest(make_session(table), vocab, params),
                  UsageError);
  params.beta_cp = 0.0;
  CHECK_NOTHROW(decode::search_nbest(make_session(table), vocab, params));
}

TEST_CASE("truncate wrappers respect budgets against greedy output") {
  const data::Vocabulary vocab = test_vocab();
  const model::ModelState state =
      model::ModelState::init(test_config(model::Variant::Standard, 11));

  const decode::Hypothesis greedy =
      decode::greedy_decode(state, vocab, "abc", std::nullopt, 24);
  REQUIRE(greedy.char_len >= 1);

  SUBCASE("zero budget gives empty text") {
    const decode::Hypothesis h =
        decode::truncate_decode(state, vocab, "abc", std::nullopt, 0, 24);
    CHECK(h.text == "");
    CHECK(h.char_len == 0);
    CHECK(h.token_ids == std::vector<int>{data::kBosId, data::kEosId});
  }
  SUBCASE("ample budget reproduces greedy") {
    const decode::Hypothesis h = decode::truncate_decode(
        state, vocab, "abc", std::nullopt, greedy.char_len + 5, 24);
    CHECK(h.token_ids == greedy.token_ids);
    CHECK(h.text == greedy.text);
    CHECK(h.sum_logprob ==
          doctest::Approx(greedy.sum_logprob).epsilon(1e-12));
    CHECK(h.forced_eos == greedy.forced_eos);
  }
  SUBCASE("every budget is honored and prefixes greedy") {
    for (int64_t budget = 0; budget <= greedy.char_len; ++budget) {
      CAPTURE(budget);
      const decode::Hypothesis h =
          decode::truncate_decode(state, vocab, "abc", std::nullopt, budget, 24);
      CHECK(h.char_len <= budget);
      CHECK(greedy.text.substr(0, h.text.size()) == h.text);
      if (budget < greedy.char_len) CHECK(h.forced_eos);
      const std::vector<int> greedy_prefix(
          greedy.token_ids.begin(),
          greedy.token_ids.begin() +
              static_cast<int64_t>(h.token_ids.size()) - 1);
      std::vector<int> got_prefix = h.token_ids;
      got_prefix.pop_back();
      CHECK(got_prefix == greedy_prefix);
    }
  }
}

TEST_CASE("model wrappers enforce verbosity rules per variant") {
  const data::Vocabulary vocab = test_vocab();
  decode::SearchParams params;
  params.beam_size = 2;
  params.nbest = 1;
  params.max_steps = 8;

  SUBCASE("prepend variants require a class") {
    const model::ModelState state =
        model::ModelState::init(test_config(model::Variant::EncTok));
    CHECK_THROWS_AS(
        decode::beam_search(state, vocab, "ab", std::nullopt, params),
        UsageError);
    const decode::NBestList out = decode::beam_search(
        state, vocab, "ab", data::Verbosity::Short, params);
    CHECK(!out.hypotheses.empty());
    CHECK_NOTHROW(
        decode::greedy_decode(state, vocab, "ab", data::Verbosity::Long, 8));
  }
  SUBCASE("standard models reject a class") {
    const model::ModelState state =
        model::ModelState::init(test_config());
    CHECK_THROWS_AS(
        decode::beam_search(state, vocab, "ab", data::Verbosity::Short, params),
        UsageError);
    CHECK_NOTHROW(decode::beam_search(state, vocab, "ab", std::nullopt, params));
  }
  SUBCASE("embedding variants take the class without tagging the source") {
    const model::ModelState state =
        model::ModelState::init(test_config(model::Variant::EncSum));
    const decode::NBestList out = decode::beam_search(
        state, vocab, "ab", data::Verbosity::Normal, params);
    CHECK(!out.hypotheses.empty());
  }
  SUBCASE("empty source is rejected") {
    const model::ModelState state =
        model::ModelState::init(test_config());
    CHECK_THROWS_AS(decode::beam_search(state, vocab, "", std::nullopt, params),
                    UsageError);
  }
  SUBCASE("out-of-vocabulary sources decode through UNK") {
    const model::ModelState state =
        model::ModelState::init(test_config());
    const decode::NBestList out =
        decode::beam_search(state, vocab, "xyz", std::nullopt, params);
    CHECK(out.source_chars == 3);
    CHECK(!out.hypotheses.empty());
  }
}

TEST_CASE("sessions exhaust at the model length cap") {
  const data::Vocabulary vocab = test_vocab();
  model::ModelConfig cfg = test_config(model::Variant::Standard, 5);
  cfg.max_len = 8;
  const model::ModelState state =
      model::ModelState::init(cfg);

  decode::SearchParams params;
  params.beam_size = 3;
  params.nbest = 3;
  params.max_steps = 50;
  const decode::NBestList out =
      decode::beam_search(state, vocab, "abc", std::nullopt, params);
  REQUIRE(!out.hypotheses.empty());
  for (const decode::Hypothesis& h : out.hypotheses) {
    CHECK(h.token_ids.size() <= static_cast<size_t>(cfg.max_len) + 1);
  }
  const decode::Hypothesis g =
      decode::greedy_decode(state, vocab, "abc", std::nullopt, 50);
  CHECK(g.token_ids.size() <= static_cast<size_t>(cfg.max_len) + 1);
}

TEST_CASE("n-best JSONL round-trips byte for byte") {
  const data::Vocabulary vocab = test_vocab();
  const model::ModelState state =
      model::ModelState::init(test_config(model::Variant::Standard, 13));

  decode::SearchParams params;
  params.beam_size = 3;
  params.nbest = 3;
  params.alpha_lp = 0.5;
  params.max_steps = 12;

  std::vector<decode::NBestEntry> entries;
  entries.push_back(
      {0, decode::beam_search(state, vocab, "abc", std::nullopt, params)});
  entries.push_back(
      {1, decode::beam_search(state, vocab, "jihg", std::nullopt, params)});
  {
    decode::NBestEntry forced;
    forced.id = 2;
    forced.list.source = "b";
    forced.list.source_chars = 1;
    decode::Hypothesis h;
    h.text = "abab";
    h.sum_logprob = -3.5000000000000004;
    h.char_len = 4;
    h.score = -1.2345678901234567;
    h.forced_eos = true;
    forced.list.hypotheses.push_back(h);
    entries.push_back(forced);
  }

  const auto dir = fresh_temp_dir();
  const auto path = dir / "nbest.jsonl";
  decode::save_nbest(entries, path);

  const std::vector<decode::NBestEntry> loaded = decode::load_nbest(path);
  REQUIRE(loaded.size() == entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    CHECK(loaded[i].id == entries[i].id);
    CHECK(loaded[i].list.source == entries[i].list.source);
    CHECK(loaded[i].list.source_chars == entries[i].list.source_chars);
    REQUIRE(loaded[i].list.hypotheses.size() ==
            entries[i].list.hypotheses.size());
    for (size_t k = 0; k < entries[i].list.hypotheses.size(); ++k) {
      const decode::Hypothesis& want = entries[i].list.hypotheses[k];
      const decode::Hypothesis& got = loaded[i].list.hypotheses[k];
      CHECK(got.text == want.text);
      CHECK(got.sum_logprob == want.sum_logprob);  // exact double round-trip
      CHECK(got.char_len == want.char_len);
      CHECK(got.score == want.score);
      CHECK(got.forced_eos == want.forced_eos);
      CHECK(got.token_ids.empty());
    }
  }

  const auto again = dir / "again.jsonl";
  decode::save_nbest(loaded, again);
  CHECK(read_file(path) == read_file(again));

  std::filesystem::remove_all(dir);
}

TEST_CASE("n-best loader reports malformed lines") {
  const auto dir = fresh_temp_dir();

  SUBCASE("bad JSON names the line") {
    const auto path = dir / "bad.jsonl";
    {
      std::ofstream out(path);
      out << R"({"id":0,"source":"a","source_chars":1,"hypotheses":[]})"
          << "\n";
      out << "{oops\n";
    }
    try {
      decode::load_nbest(path);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
  SUBCASE("missing keys fail") {
    const auto path = dir / "missing.jsonl";
    {
      std::ofstream out(path);
      out << R"({"id":0,"source":"a"})" << "\n";
    }
    CHECK_THROWS_AS(decode::load_nbest(path), DataError);
  }
  SUBCASE("blank lines are skipped") {
    const auto path = dir / "blank.jsonl";
    {
      std::ofstream out(path);
      out << R"({"id":4,"source":"a","source_chars":1,"hypotheses":[]})"
          << "\n\n";
    }
    const auto entries = decode::load_nbest(path);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].id == 4);
  }
  SUBCASE("missing file fails") {
    CHECK_THROWS_AS(decode::load_nbest(dir / "nope.jsonl"), DataError);
  }

  std::filesystem::remove_all(dir);
}

TEST_SUITE_END();

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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isochron/common/error.h"
#include "isochron/common/rng.h"
#include "isochron/data/corpus.h"
#include "isochron/data/vocab.h"
#include "isochron/model/checkpoint.h"
#include "isochron/model/config.h"
#include "isochron/model/model.h"
#include "isochron/train/optimizer.h"
#include "isochron/train/plan.h"
#include "isochron/train/trainer.h"

namespace {

using isochron::DataError;
using isochron::RandomStream;
using isochron::UsageError;
namespace data = isochron::data;
namespace model = isochron::model;
namespace num = isochron::num;
namespace train = isochron::train;

data::Vocabulary test_vocab() {
  return data::Vocabulary::from_characters(
      {" ", "a", "b", "c", "d", "s", "t", "u"});
}

model::ModelConfig tiny_config(model::Variant variant = model::Variant::Standard) {
  model::ModelConfig cfg;
  cfg.layers = 1;
  cfg.model_dim = 16;
  cfg.heads = 2;
  cfg.ffn_dim = 32;
  cfg.vocab_size = test_vocab().size();
  cfg.max_len = 32;
  cfg.variant = variant;
  cfg.seed = 3;
  return cfg;
}

train::TrainConfig tiny_train_config() {
  train::TrainConfig cfg;
  cfg.peak_lr = 1e-3;
  cfg.warmup_steps = 4;
  cfg.batch_size = 4;
  cfg.max_epochs = 2;
  cfg.seed = 11;
  return cfg;
}

std::vector<data::ParallelExample> tiny_corpus() {
  std::vector<data::ParallelExample> corpus;
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"aa bb", "ss tt"},       {"bb cc dd", "tt uu"},
      {"aa", "ss tt uu"},       {"cc dd", "uu ss"},
      {"dd aa bb", "tt ss uu"}, {"bb", "uu"},
      {"aa cc", "ss"},          {"dd bb aa cc", "uu tt ss"},
  };
  for (size_t i = 0; i < rows.size(); ++i) {
    corpus.push_back({static_cast<int64_t>(i + 1), rows[i].first,
                      rows[i].second, std::nullopt});
  }
  return corpus;
}

std::vector<data::ParallelExample> tiny_validation() {
  return {{101, "aa bb cc", "ss tt uu"}, {102, "cc aa", "tt"},
          {103, "bb dd", "uu ss tt"}};
}

std::filesystem::path fresh_temp_dir() {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("isochron_train_" + std::to_string(getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

bool params_bitwise_equal(const model::ModelState& a,
                          const model::ModelState& b) {
  const auto& pa = a.parameters();
  const auto& pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name) return false;
    if (pa[i].tensor.size() != pb[i].tensor.size()) return false;
    const float* da = pa[i].tensor.data();
    const float* db = pb[i].tensor.data();
    for (int64_t k = 0; k < pa[i].tensor.size(); ++k) {
      if (da[k] != db[k]) return false;
    }
  }
  return true;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("learning rate schedule matches hand values") {
  train::TrainConfig cfg;
  cfg.peak_lr = 3e-3;
  cfg.warmup_steps = 400;

  CHECK(train::lr_schedule(400, cfg) == doctest::Approx(3e-3).epsilon(1e-12));
  CHECK(train::lr_schedule(200, cfg) == doctest::Approx(1.5e-3).epsilon(1e-12));
  CHECK(train::lr_schedule(1600, cfg) ==
        doctest::Approx(1.5e-3).epsilon(1e-12));
  CHECK(train::lr_schedule(1, cfg) ==
        doctest::Approx(3e-3 / 400.0).epsilon(1e-12));

  SUBCASE("continuous at the warmup joint, rising before, falling after") {
    double prev = 0.0;
    for (int64_t step = 1; step <= 400; ++step) {
      const double lr = train::lr_schedule(step, cfg);
      CHECK(lr > prev);
      prev = lr;
    }
    CHECK(std::abs(train::lr_schedule(399, cfg) - cfg.peak_lr) < 1e-5);
    CHECK(std::abs(train::lr_schedule(401, cfg) - cfg.peak_lr) < 1e-5);
    prev = cfg.peak_lr;
    for (int64_t step = 401; step <= 3000; step += 7) {
      const double lr = train::lr_schedule(step, cfg);
      CHECK(lr < prev);
      prev = lr;
    }
  }

  SUBCASE("rejects bad steps and configs") {
    CHECK_THROWS_AS(train::lr_schedule(0, cfg), UsageError);
    CHECK_THROWS_AS(train::lr_schedule(-3, cfg), UsageError);
    train::TrainConfig bad;
    bad.peak_lr = 0.0;
    bad.warmup_steps = 0;
    bad.batch_size = 0;
    bad.max_epochs = 0;
    bad.adam_beta1 = 1.0;
    bad.adam_eps = 0.0;
    try {
      bad.validate();
      FAIL("expected UsageError");
    } catch (const UsageError& e) {
      const std::string msg = e.what();
      for (const char* part : {"peak_lr", "warmup_steps", "batch_size",
                               "max_epochs", "adam_beta1", "adam_eps"}) {
        CAPTURE(part);
        CHECK(msg.find(part) != std::string::npos);
      }
    }
  }
}

TEST_CASE("adam first step matches the closed form") {
  train::TrainConfig cfg;
  std::vector<model::ModelState::Param> params;
  params.push_back({"w", num::Tensor::from_data({2}, {1.0f, -2.0f}, true)});
  float* grad = params[0].tensor.mutable_grad();
  grad[0] = 0.5f;
  grad[1] = -0.25f;

  train::AdamOptimizer opt(cfg);
  opt.step(params, 0.1);
  // With bias correction the first update is lr * g / (|g| + eps).
  const float* w = params[0].tensor.data();
  CHECK(w[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
  CHECK(w[1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-6));
  CHECK(opt.steps_taken() == 1);
  CHECK(params[0].tensor.grad()[0] == 0.0f);  // cleared by the step
  CHECK(params[0].tensor.grad()[1] == 0.0f);
}

TEST_CASE("a reset optimizer acts like a fresh one") {
  train::TrainConfig cfg;
  RandomStream rng(99);

  const auto make_param = [&](const std::vector<float>& values) {
    std::vector<model::ModelState::Param> params;
    params.push_back({"w", num::Tensor::from_data(
                               {static_cast<int64_t>(values.size())},
                               std::vector<float>(values), true)});
    return params;
  };

  auto seasoned_params = make_param({0.3f, -1.2f, 2.0f});
  train::AdamOptimizer seasoned(cfg);
  for (int step = 0; step < 5; ++step) {
    float* g = seasoned_params[0].tensor.mutable_grad();
    for (int i = 0; i < 3; ++i) g[i] = static_cast<float>(rng.normal());
    seasoned.step(seasoned_params, 0.01);
  }
  seasoned.reset();
  CHECK(seasoned.steps_taken() == 0);

  const float* w = seasoned_params[0].tensor.data();
  auto fresh_params = make_param({w[0], w[1], w[2]});
  train::AdamOptimizer fresh(cfg);

  const std::vector<float> grad = {0.7f, -0.1f, 0.02f};
  for (int i = 0; i < 3; ++i) {
    seasoned_params[0].tensor.mutable_grad()[i] = grad[i];
    fresh_params[0].tensor.mutable_grad()[i] = grad[i];
  }
  seasoned.step(seasoned_params, 0.01);
  fresh.step(fresh_params, 0.01);
  for (int i = 0; i < 3; ++i) {
    CHECK(seasoned_params[0].tensor.data()[i] ==
          fresh_params[0].tensor.data()[i]);
  }
}

TEST_CASE("training is bitwise reproducible") {
  const data::Vocabulary vocab = test_vocab();
  const model::ModelState init = model::ModelState::init(tiny_config());
  const train::TrainConfig cfg = tiny_train_config();

  const auto dir1 = fresh_temp_dir();
  const auto dir2 = fresh_temp_dir();
  const train::StageResult r1 = train::train_stage(
      init, tiny_corpus(), tiny_validation(), vocab, cfg, false, dir1);
  const train::StageResult r2 = train::train_stage(
      init, tiny_corpus(), tiny_validation(), vocab, cfg, false, dir2);

  CHECK(r1.log.step_loss == r2.log.step_loss);
  CHECK(r1.log.lr_trace == r2.log.lr_trace);
  REQUIRE(r1.log.epochs.size() == r2.log.epochs.size());
  for (size_t i = 0; i < r1.log.epochs.size(); ++i) {
    CHECK(r1.log.epochs[i].val_loss == r2.log.epochs[i].val_loss);
  }
  CHECK(params_bitwise_equal(r1.state, r2.state));
  CHECK(read_file(dir1 / "epoch_002" / "weights.bin") ==
        read_file(dir2 / "epoch_002" / "weights.bin"));

  SUBCASE("the input state is left untouched") {
    CHECK(params_bitwise_equal(init, model::ModelState::init(tiny_config())));
  }

  SUBCASE("a different seed changes the trace") {
    train::TrainConfig other = cfg;
    other.seed = 12;
    const train::StageResult r3 = train::train_stage(
        init, tiny_corpus(), tiny_validation(), vocab, other,
        false, fresh_temp_dir());
    CHECK(r3.log.step_loss != r1.log.step_loss);
  }
}

TEST_CASE("one epoch of training reduces the loss") {
  const data::Vocabulary vocab = test_vocab();
  const model::ModelState init = model::ModelState::init(tiny_config());
  train::TrainConfig cfg = tiny_train_config();
  cfg.max_epochs = 1;

  const std::vector<data::ParallelExample> corpus = tiny_corpus();
  const double before = train::validation_loss(init, corpus, vocab, 4);
  const train::StageResult result = train::train_stage(
      init, corpus, corpus, vocab, cfg, false, fresh_temp_dir());
  const double after = train::validation_loss(result.state, corpus, vocab, 4);
  CHECK(after < before);
  CHECK(result.log.epochs.back().val_loss == after);
}

TEST_CASE("tagging must match the variant") {
  const data::Vocabulary vocab = test_vocab();
  const auto corpus = tiny_corpus();
  const auto val = tiny_validation();
  const train::TrainConfig cfg = tiny_train_config();

  const model::ModelState standard = model::ModelState::init(tiny_config());
  CHECK_THROWS_WITH_AS(
      train::train_stage(standard, corpus, val, vocab, cfg, true,
                         fresh_temp_dir()),
      doctest::Contains("takes no verbosity"), UsageError);

  const model::ModelState enc_tok =
      model::ModelState::init(tiny_config(model::Variant::EncTok));
  CHECK_THROWS_WITH_AS(
      train::train_stage(enc_tok, corpus, val, vocab, cfg, false,
                         fresh_temp_dir()),
      doctest::Contains("requires tagging"), UsageError);
}

TEST_CASE("tagged training classifies pairs itself") {
  const data::Vocabulary vocab = test_vocab();
  const model::ModelState init =
      model::ModelState::init(tiny_config(model::Variant::EncTok));
  train::TrainConfig cfg = tiny_train_config();
  cfg.max_epochs = 1;
  // Corpus rows carry no classes; the stage must classify and tag them.
  const train::StageResult result =
      train::train_stage(init, tiny_corpus(), tiny_validation(), vocab, cfg,
                         true, fresh_temp_dir());
  CHECK(result.state.config().variant == model::Variant::EncTok);
  CHECK(result.log.step_loss.size() == 2);  // 8 pairs / batch 4
}

TEST_CASE("epoch checkpoints land on disk with recorded losses") {
  const data::Vocabulary vocab = test_vocab();
  const model::ModelState init = model::ModelState::init(tiny_config());
  const train::TrainConfig cfg = tiny_train_config();
  const auto dir = fresh_temp_dir();

  const train::StageResult result = train::train_stage(
      init, tiny_corpus(), tiny_validation(), vocab, cfg, false, dir);

  REQUIRE(result.log.epochs.size() == 2);
  for (int64_t epoch = 1; epoch <= 2; ++epoch) {
    const auto& record = result.log.epochs[static_cast<size_t>(epoch - 1)];
    CHECK(record.epoch == epoch);
    CHECK(std::isfinite(record.val_loss));
    CHECK(std::filesystem::exists(
        std::filesystem::path(record.checkpoint_dir) / "weights.bin"));
    const model::LoadedModel loaded = model::load_model(record.checkpoint_dir);
    CHECK(loaded.state.config() == init.config());
  }
  CHECK(params_bitwise_equal(
      model::load_model(result.log.epochs.back().checkpoint_dir).state,
      result.state));

  SUBCASE("the log serializes as JSON") {
    const auto path = dir / "train_log.json";
    train::save_train_log(result.log, path);
    const nlohmann::json j = nlohmann::json::parse(read_file(path));
    CHECK(j.at("seed").get<uint64_t>() == cfg.seed);
    CHECK(j.at("step_loss").size() == result.log.step_loss.size());
    CHECK(j.at("lr_trace").size() == result.log.lr_trace.size());
    CHECK(j.at("epochs").size() == 2);
    CHECK(j.at("epochs")[0].at("val_loss").get<double>() ==
          result.log.epochs[0].val_loss);
    CHECK(j.contains("wall_seconds"));
  }
}

TEST_CASE("checkpoint selection takes the earliest minimum") {
  CHECK(train::argmin_earliest({2.0, 1.5, 1.7}) == 1);
  CHECK(train::argmin_earliest({1.5, 1.5}) == 0);
  CHECK(train::argmin_earliest({3.0}) == 0);
  CHECK_THROWS_AS(train::argmin_earliest({}), UsageError);

  SUBCASE("selection recomputes the recorded validation losses") {
    const data::Vocabulary vocab = test_vocab();
    const model::ModelState init = model::ModelState::init(tiny_config());
    train::TrainConfig cfg = tiny_train_config();
    cfg.max_epochs = 3;
    const train::StageResult result =
        train::train_stage(init, tiny_corpus(), tiny_validation(), vocab, cfg,
                           false, fresh_temp_dir());

    std::vector<std::string> dirs;
    std::vector<double> recorded;
    for (const auto& e : result.log.epochs) {
      dirs.push_back(e.checkpoint_dir);
      recorded.push_back(e.val_loss);
    }
    const train::SelectedCheckpoint chosen =
        train::select_checkpoint(dirs, tiny_validation(), cfg.batch_size);
    CHECK(chosen.index == train::argmin_earliest(recorded));
    CHECK(chosen.dir == dirs[chosen.index]);
    CHECK(train::validation_loss(chosen.state, tiny_validation(), chosen.vocab,
                                 cfg.batch_size) == recorded[chosen.index]);
  }

  CHECK_THROWS_AS(train::select_checkpoint({}, tiny_validation()), UsageError);
}

TEST_CASE("plan validation lists every problem") {
  train::StagePlan plan;
  CHECK_THROWS_WITH_AS(train::validate_plan(plan, model::Variant::EncTok),
                       doctest::Contains("no stages"), UsageError);

  train::TrainConfig bad_cfg = tiny_train_config();
  bad_cfg.peak_lr = 0.0;
  plan.stages.push_back({"", true, bad_cfg});
  plan.stages.push_back({"generic", false, tiny_train_config()});
  try {
    train::validate_plan(plan, model::Variant::Standard);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("empty corpus id") != std::string::npos);
    CHECK(msg.find("peak_lr") != std::string::npos);
    CHECK(msg.find("variant") != std::string::npos);
    CHECK(msg.find("switches off") != std::string::npos);
  }

  SUBCASE("the all-untagged plan is legal for Standard") {
    train::StagePlan baseline;
    baseline.stages.push_back({"generic", false, tiny_train_config()});
    CHECK_NOTHROW(train::validate_plan(baseline, model::Variant::Standard));
  }
}

TEST_CASE("canonical plans have the documented shape") {
  const train::TrainConfig pre = train::desk_pretrain_config();
  const train::TrainConfig fine = train::desk_finetune_config();
  CHECK(pre.max_epochs == 10);
  CHECK(fine.max_epochs == 20);
  CHECK(pre.warmup_steps == 400);
  CHECK(pre.batch_size == 64);
  CHECK(pre.peak_lr == 3e-3);

  const train::StagePlan single = train::single_stage_plan(pre, fine);
  REQUIRE(single.stages.size() == 2);
  CHECK(single.stages[0].corpus_id == "generic");
  CHECK_FALSE(single.stages[0].tagging);
  CHECK(single.stages[1].corpus_id == "in_domain");
  CHECK(single.stages[1].tagging);

  const train::StagePlan two = train::two_stage_plan(pre, fine, fine);
  REQUIRE(two.stages.size() == 3);
  CHECK(two.stages[0].corpus_id == "generic");
  CHECK_FALSE(two.stages[0].tagging);
  CHECK(two.stages[1].corpus_id == "generic");
  CHECK(two.stages[1].tagging);
  CHECK(two.stages[2].corpus_id == "in_domain");
  CHECK(two.stages[2].tagging);

  CHECK_NOTHROW(train::validate_plan(single, model::Variant::EncTok));
  CHECK_NOTHROW(train::validate_plan(two, model::Variant::EncTok));
}

TEST_CASE("a two-stage plan runs three stages and upgrades the variant") {
  const data::Vocabulary vocab = test_vocab();
  train::TrainConfig cfg = tiny_train_config();
  cfg.max_epochs = 1;
  const train::StagePlan plan = train::two_stage_plan(cfg, cfg, cfg);
  const std::map<std::string, std::vector<data::ParallelExample>> corpora = {
      {"generic", tiny_corpus()}, {"in_domain", tiny_corpus()}};
  const auto dir = fresh_temp_dir();

  const train::PlanResult result =
      train::run_plan(plan, tiny_config(model::Variant::EncTok), std::nullopt,
                      corpora, tiny_validation(), vocab, dir);

  REQUIRE(result.logs.size() == 3);
  CHECK(model::load_model((dir / "stage_1" / "epoch_001").string())
            .state.config()
            .variant == model::Variant::Standard);
  CHECK(model::load_model((dir / "stage_2" / "epoch_001").string())
            .state.config()
            .variant == model::Variant::EncTok);
  CHECK(result.state.config().variant == model::Variant::EncTok);
  CHECK(result.selected_epoch == 1);
  CHECK(result.selected_checkpoint.find("stage_3") != std::string::npos);
  for (int stage = 1; stage <= 3; ++stage) {
    CHECK(std::filesystem::exists(dir / ("stage_" + std::to_string(stage)) /
                                  "train_log.json"));
  }

  SUBCASE("a provided initial state skips fresh initialization") {
    const model::ModelState pretrained =
        model::load_model((dir / "stage_1" / "epoch_001").string()).state;
    train::StagePlan tail;
    tail.stages.push_back({"in_domain", true, cfg});
    const train::PlanResult continued = train::run_plan(
        tail, tiny_config(model::Variant::EncTok), pretrained, corpora,
        tiny_validation(), vocab, fresh_temp_dir());
    CHECK(continued.state.config().variant == model::Variant::EncTok);
  }
}

TEST_CASE("a missing corpus fails before any training starts") {
  const data::Vocabulary vocab = test_vocab();
  train::TrainConfig cfg = tiny_train_config();
  cfg.max_epochs = 1;
  const train::StagePlan plan = train::two_stage_plan(cfg, cfg, cfg);
  const std::map<std::string, std::vector<data::ParallelExample>> corpora = {
      {"generic", tiny_corpus()}};  // no in_domain
  const auto dir = fresh_temp_dir() / "plan_out";

  CHECK_THROWS_WITH_AS(
      train::run_plan(plan, tiny_config(model::Variant::EncTok), std::nullopt,
                      corpora, tiny_validation(), vocab, dir),
      doctest::Contains("in_domain"), DataError);
  CHECK_FALSE(std::filesystem::exists(dir));
}

TEST_CASE("the reset flag controls optimizer carry across stages") {
  const data::Vocabulary vocab = test_vocab();
  train::TrainConfig cfg = tiny_train_config();
  cfg.max_epochs = 1;  // 2 steps per stage on 8 pairs
  const std::map<std::string, std::vector<data::ParallelExample>> corpora = {
      {"generic", tiny_corpus()}, {"in_domain", tiny_corpus()}};

  const auto run_with_reset = [&](bool reset) {
    train::TrainConfig staged = cfg;
    staged.reset_optimizer_on_finetune = reset;
    const train::StagePlan plan = train::single_stage_plan(staged, staged);
    return train::run_plan(plan, tiny_config(model::Variant::EncTok),
                           std::nullopt, corpora, tiny_validation(), vocab,
                           fresh_temp_dir());
  };

  const train::PlanResult with_reset = run_with_reset(true);
  CHECK(with_reset.logs[1].lr_trace.front() == train::lr_schedule(1, cfg));

  const train::PlanResult carried = run_with_reset(false);
  CHECK(carried.logs[1].lr_trace.front() ==
        train::lr_schedule(
            static_cast<int64_t>(carried.logs[0].lr_trace.size()) + 1, cfg));
}

TEST_SUITE_END();

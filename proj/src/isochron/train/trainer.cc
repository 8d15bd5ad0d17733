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

#include "isochron/train/trainer.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <span>
#include <utility>

#include <nlohmann/json.hpp>

#include "isochron/common/error.h"
#include "isochron/common/rng.h"
#include "isochron/model/config.h"
#include "isochron/numcore/graph.h"

namespace isochron::train {

namespace {

using nlohmann::json;

// Tokenizes examples for the given variant: conditioned variants get
// recomputed classes and the variant's tag placement, Standard trains and
// validates untagged.
std::vector<data::TrainingPair> prepare_pairs(
    const std::vector<data::ParallelExample>& examples,
    const data::Vocabulary& vocab, model::Variant variant, int64_t max_len) {
  const bool tagged = model::variant_uses_verbosity(variant);
  const data::TagPlacement placement =
      tagged ? model::placement_for(variant) : data::TagPlacement::None;
  std::vector<data::TrainingPair> pairs;
  pairs.reserve(examples.size());
  for (const data::ParallelExample& example : examples) {
    data::ParallelExample classified = example;
    if (tagged) {
      classified.verbosity =
          data::classify_verbosity(example.source, example.target);
    } else {
      classified.verbosity.reset();
    }
    data::TrainingPair pair = data::tag_example(classified, vocab, placement);
    ISO_CHECK_DATA(static_cast<int64_t>(pair.source_ids.size()) <= max_len,
                   "example " << example.id << ": source exceeds model max_len "
                              << max_len);
    ISO_CHECK_DATA(static_cast<int64_t>(pair.target_ids.size()) + 1 <= max_len,
                   "example " << example.id << ": target exceeds model max_len "
                              << max_len);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

int64_t pair_tokens(const data::TrainingPair& pair) {
  return static_cast<int64_t>(pair.target_ids.size()) + 1;  // EOS
}

double loss_over(const model::ModelState& state,
                 std::span<const data::TrainingPair> pairs,
                 int64_t batch_size) {
  double total = 0.0;
  int64_t total_tokens = 0;
  for (size_t start = 0; start < pairs.size();
       start += static_cast<size_t>(batch_size)) {
    const size_t count =
        std::min(static_cast<size_t>(batch_size), pairs.size() - start);
    const std::span<const data::TrainingPair> batch =
        pairs.subspan(start, count);
    int64_t tokens = 0;
    for (const data::TrainingPair& pair : batch) tokens += pair_tokens(pair);
    const num::Tensor loss = state.forward_loss(batch, /*train_mode=*/false);
    total += static_cast<double>(loss.item()) * static_cast<double>(tokens);
    total_tokens += tokens;
  }
  return total / static_cast<double>(total_tokens);
}

std::string epoch_dir_name(int64_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03d", static_cast<int>(epoch));
  return buf;
}

}  // namespace

void save_train_log(const TrainLog& log, const std::filesystem::path& path) {
  json epochs = json::array();
  for (const EpochRecord& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"val_loss", e.val_loss},
                      {"checkpoint", e.checkpoint_dir}});
  }
  const json j = {{"seed", log.seed},
                  {"step_loss", log.step_loss},
                  {"lr_trace", log.lr_trace},
                  {"epochs", std::move(epochs)},
                  {"wall_seconds", log.wall_seconds}};
  std::ofstream out(path, std::ios::binary);
  ISO_CHECK_DATA(out.good(), "cannot open " << path << " for writing");
  out << j.dump(2) << "\n";
  out.flush();
  ISO_CHECK_DATA(out.good(), "failed writing " << path);
}

double validation_loss(const model::ModelState& state,
                       const std::vector<data::ParallelExample>& examples,
                       const data::Vocabulary& vocab, int64_t batch_size) {
  ISO_CHECK_ARG(!examples.empty(), "validation_loss: empty corpus");
  ISO_CHECK_ARG(batch_size >= 1, "validation_loss: batch_size must be >= 1");
  const std::vector<data::TrainingPair> pairs = prepare_pairs(
      examples, vocab, state.config().variant, state.config().max_len);
  return loss_over(state, pairs, batch_size);
}

StageResult train_stage(const model::ModelState& state,
                        const std::vector<data::ParallelExample>& train_corpus,
                        const std::vector<data::ParallelExample>& val_corpus,
                        const data::Vocabulary& vocab, const TrainConfig& cfg,
                        bool tagging, const std::filesystem::path& out_dir,
                        OptimizerState* carried) {
  cfg.validate();
  const model::Variant variant = state.config().variant;
  ISO_CHECK_ARG(!tagging || model::variant_uses_verbosity(variant),
                "train_stage: tagging is on but variant "
                    << model::to_string(variant) << " takes no verbosity");
  ISO_CHECK_ARG(tagging || !model::variant_uses_verbosity(variant),
                "train_stage: variant " << model::to_string(variant)
                                        << " requires tagging");
  ISO_CHECK_ARG(!train_corpus.empty(), "train_stage: empty training corpus");
  ISO_CHECK_ARG(!val_corpus.empty(), "train_stage: empty validation corpus");
  ISO_CHECK_ARG(vocab.size() == state.config().vocab_size,
                "train_stage: vocabulary size " << vocab.size()
                                                << " != model vocab "
                                                << state.config().vocab_size);

  const auto start_time = std::chrono::steady_clock::now();
  const std::vector<data::TrainingPair> train_pairs = prepare_pairs(
      train_corpus, vocab, variant, state.config().max_len);
  const std::vector<data::TrainingPair> val_pairs = prepare_pairs(
      val_corpus, vocab, variant, state.config().max_len);

  model::ModelState trained = state.clone();
  OptimizerState fresh(cfg);
  OptimizerState& opt = carried ? *carried : fresh;

  std::filesystem::create_directories(out_dir);
  TrainLog log;
  log.seed = cfg.seed;

  std::vector<size_t> order(train_pairs.size());
  std::vector<data::TrainingPair> batch;
  for (int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    RandomStream shuffle_rng(
        derive_seed(cfg.seed, "shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    RandomStream dropout_rng(
        derive_seed(cfg.seed, "dropout", static_cast<uint64_t>(epoch)));

    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t count = std::min(static_cast<size_t>(cfg.batch_size),
                                    order.size() - start);
      batch.clear();
      for (size_t i = 0; i < count; ++i) {
        batch.push_back(train_pairs[order[start + i]]);
      }

      ++opt.schedule_step;
      const double lr = lr_schedule(opt.schedule_step, cfg);
      num::Graph graph;
      num::Tensor loss;
      {
        num::Graph::Scope scope(graph);
        loss = trained.forward_loss(batch, /*train_mode=*/true, &dropout_rng);
        graph.backward(loss);
      }
      opt.adam.step(trained.parameters(), lr);
      log.step_loss.push_back(static_cast<double>(loss.item()));
      log.lr_trace.push_back(lr);
    }

    const std::filesystem::path ckpt = out_dir / epoch_dir_name(epoch);
    model::save_model(trained, vocab, ckpt.string());
    const double val = loss_over(trained, val_pairs, cfg.batch_size);
    log.epochs.push_back({epoch, val, ckpt.string()});
  }

  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    start_time)
          .count();
  return {std::move(trained), std::move(log)};
}

size_t argmin_earliest(const std::vector<double>& values) {
  ISO_CHECK_ARG(!values.empty(), "argmin_earliest: empty values");
  size_t best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  return best;
}

SelectedCheckpoint select_checkpoint(
    const std::vector<std::string>& checkpoint_dirs,
    const std::vector<data::ParallelExample>& val_corpus,
    int64_t batch_size) {
  ISO_CHECK_ARG(!checkpoint_dirs.empty(),
                "select_checkpoint: no checkpoints to select from");
  std::vector<double> losses;
  losses.reserve(checkpoint_dirs.size());
  for (const std::string& dir : checkpoint_dirs) {
    const model::LoadedModel loaded = model::load_model(dir);
    losses.push_back(
        validation_loss(loaded.state, val_corpus, loaded.vocab, batch_size));
  }
  const size_t best = argmin_earliest(losses);
  model::LoadedModel chosen = model::load_model(checkpoint_dirs[best]);
  return {std::move(chosen.state), std::move(chosen.vocab), best,
          checkpoint_dirs[best]};
}

}  // namespace isochron::train

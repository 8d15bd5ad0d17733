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

#ifndef ISOCHRON_TRAIN_TRAINER_H_
#define ISOCHRON_TRAIN_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "isochron/data/corpus.h"
#include "isochron/data/vocab.h"
#include "isochron/model/checkpoint.h"
#include "isochron/model/model.h"
#include "isochron/train/optimizer.h"

namespace isochron::train {

struct EpochRecord {
  int64_t epoch = 0;  // 1-based
  double val_loss = 0.0;
  std::string checkpoint_dir;
};

struct TrainLog {
  uint64_t seed = 0;
  std::vector<double> step_loss;  // training loss per optimizer step
  std::vector<double> lr_trace;   // learning rate per optimizer step
  std::vector<EpochRecord> epochs;
  double wall_seconds = 0.0;
};

// Writes the log as indented JSON (keys: seed, step_loss, lr_trace, epochs,
// wall_seconds). Everything except wall_seconds is reproducible per seed.
void save_train_log(const TrainLog& log, const std::filesystem::path& path);

// Adam moments plus the schedule step, carried across stages when the plan
// runs with reset_optimizer_on_finetune off.
struct OptimizerState {
  explicit OptimizerState(const TrainConfig& cfg) : adam(cfg) {}
  AdamOptimizer adam;
  int64_t schedule_step = 0;
};

struct StageResult {
  model::ModelState state;
  TrainLog log;
};

// Token-weighted mean validation loss (teacher-forced, no dropout), batched
// by batch_size. Pairs are classified and tagged to match the state's
// variant: Standard evaluates untagged, conditioned variants evaluate with
// recomputed verbosity classes.
double validation_loss(const model::ModelState& state,
                       const std::vector<data::ParallelExample>& examples,
                       const data::Vocabulary& vocab, int64_t batch_size);

// One optimization stage: seeded shuffle per epoch (a fresh permutation
// derived from cfg.seed and the epoch index), Adam updates at lr_schedule,
// dropout per the model config, one checkpoint directory per epoch under
// out_dir (epoch_001, epoch_002, ...) with its validation loss recorded.
// `tagging` must match the variant: on for verbosity-conditioned variants
// (classes are recomputed from the pair texts, then applied per the
// variant's placement), off for Standard. The input state is not modified;
// the trained copy is returned. When `carried` is non-null the optimizer
// moments and schedule step continue from it (and advance it); otherwise
// the stage starts fresh.
StageResult train_stage(const model::ModelState& state,
                        const std::vector<data::ParallelExample>& train_corpus,
                        const std::vector<data::ParallelExample>& val_corpus,
                        const data::Vocabulary& vocab, const TrainConfig& cfg,
                        bool tagging, const std::filesystem::path& out_dir,
                        OptimizerState* carried = nullptr);

struct SelectedCheckpoint {
  model::ModelState state;
  data::Vocabulary vocab;
  size_t index = 0;  // into the checkpoint list
  std::string dir;
};

// Index of the smallest value; ties go to the earliest.
size_t argmin_earliest(const std::vector<double>& values);

// Loads every checkpoint, recomputes its validation loss, and returns the
// one with the minimum (earliest on ties). Checkpoint loading is bitwise
// exact and validation is deterministic, so the recomputed losses equal the
// ones recorded during training.
SelectedCheckpoint select_checkpoint(
    const std::vector<std::string>& checkpoint_dirs,
    const std::vector<data::ParallelExample>& val_corpus,
    int64_t batch_size = 64);

}  // namespace isochron::train

#endif  // ISOCHRON_TRAIN_TRAINER_H_

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

#ifndef ISOCHRON_TRAIN_PLAN_H_
#define ISOCHRON_TRAIN_PLAN_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isochron/data/corpus.h"
#include "isochron/data/vocab.h"
#include "isochron/model/config.h"
#include "isochron/model/model.h"
#include "isochron/train/trainer.h"

namespace isochron::train {

struct Stage {
  std::string corpus_id;  // key into the corpora handed to run_plan
  bool tagging = false;
  TrainConfig config;
};

struct StagePlan {
  std::vector<Stage> stages;
};

// Desk-scale stage configs: peak 3e-3, warmup 400 steps, batch 64.
// Pretraining runs 10 epochs, fine-tuning the paper's 20.
TrainConfig desk_pretrain_config();
TrainConfig desk_finetune_config();

// Canonical plans over corpus ids "generic" and "in_domain":
//   single-stage: pretrain(generic, untagged), finetune(in_domain, tagged)
//   two-stage:    pretrain(generic, untagged), finetune(generic, tagged),
//                 finetune(in_domain, tagged)
StagePlan single_stage_plan(TrainConfig pretrain, TrainConfig finetune);
StagePlan two_stage_plan(TrainConfig pretrain, TrainConfig finetune_generic,
                         TrainConfig finetune_in_domain);

// Throws UsageError listing every violation: a plan needs at least one
// stage, every stage a corpus id and a valid config, tagged stages need a
// verbosity-conditioned experiment variant, and tagging never switches off
// again once on (a model does not return to untagged training). An
// all-untagged plan is the Standard baseline.
void validate_plan(const StagePlan& plan, model::Variant variant);

struct PlanResult {
  model::ModelState state;         // selected checkpoint of the last stage
  std::vector<TrainLog> logs;      // one per stage, in order
  size_t selected_epoch = 0;       // 1-based epoch the selection picked
  std::string selected_checkpoint;
};

// Runs the stages in order. The model starts from `init` when given (a
// pretrained state to continue from), otherwise from a fresh seeded
// initialization of `config`; training runs as Standard until the first
// tagged stage, which upgrades the state to config.variant (weights carried
// over, verbosity tables zero-initialized). Optimizer moments and schedule
// step reset at each stage whose config says so, and carry over otherwise.
// Every stage's corpus must exist in `corpora` before any training starts.
// Stage artifacts go to out_dir/stage_1, stage_2, ...: per-epoch checkpoints
// and a train_log.json. The final model is the last stage's checkpoint with
// minimal validation loss (earliest on ties).
PlanResult run_plan(
    const StagePlan& plan, const model::ModelConfig& config,
    const std::optional<model::ModelState>& init,
    const std::map<std::string, std::vector<data::ParallelExample>>& corpora,
    const std::vector<data::ParallelExample>& validation,
    const data::Vocabulary& vocab, const std::filesystem::path& out_dir);

}  // namespace isochron::train

#endif  // ISOCHRON_TRAIN_PLAN_H_

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

#include "isochron/train/plan.h"

#include <string>
#include <utility>

#include "isochron/common/error.h"

namespace isochron::train {

TrainConfig desk_pretrain_config() {
  TrainConfig cfg;
  cfg.peak_lr = 3e-3;
  cfg.warmup_steps = 400;
  cfg.batch_size = 64;
  cfg.max_epochs = 10;
  return cfg;
}

TrainConfig desk_finetune_config() {
  TrainConfig cfg = desk_pretrain_config();
  cfg.max_epochs = 20;
  return cfg;
}

StagePlan single_stage_plan(TrainConfig pretrain, TrainConfig finetune) {
  StagePlan plan;
  plan.stages.push_back({"generic", false, std::move(pretrain)});
  plan.stages.push_back({"in_domain", true, std::move(finetune)});
  return plan;
}

StagePlan two_stage_plan(TrainConfig pretrain, TrainConfig finetune_generic,
                         TrainConfig finetune_in_domain) {
  StagePlan plan;
  plan.stages.push_back({"generic", false, std::move(pretrain)});
  plan.stages.push_back({"generic", true, std::move(finetune_generic)});
  plan.stages.push_back({"in_domain", true, std::move(finetune_in_domain)});
  return plan;
}

void validate_plan(const StagePlan& plan, model::Variant variant) {
  std::vector<std::string> problems;
  if (plan.stages.empty()) problems.push_back("plan has no stages");
  bool seen_tagged = false;
  for (size_t i = 0; i < plan.stages.size(); ++i) {
    const Stage& stage = plan.stages[i];
    const std::string where = "stage " + std::to_string(i + 1);
    if (stage.corpus_id.empty()) problems.push_back(where + ": empty corpus id");
    try {
      stage.config.validate();
    } catch (const UsageError& e) {
      problems.push_back(where + ": " + e.what());
    }
    if (stage.tagging && !model::variant_uses_verbosity(variant)) {
      problems.push_back(where + ": tagging is on but the experiment variant "
                         "is Standard");
    }
    if (seen_tagged && !stage.tagging) {
      problems.push_back(where + ": tagging switches off after a tagged stage");
    }
    seen_tagged = seen_tagged || stage.tagging;
  }
  if (!problems.empty()) {
    std::string message = "invalid stage plan:";
    for (const std::string& p : problems) message += "\n  - " + p;
    throw UsageError(message);
  }
}

PlanResult run_plan(
    const StagePlan& plan, const model::ModelConfig& config,
    const std::optional<model::ModelState>& init,
    const std::map<std::string, std::vector<data::ParallelExample>>& corpora,
    const std::vector<data::ParallelExample>& validation,
    const data::Vocabulary& vocab, const std::filesystem::path& out_dir) {
  validate_plan(plan, config.variant);
  ISO_CHECK_ARG(!validation.empty(), "run_plan: empty validation corpus");
  for (const Stage& stage : plan.stages) {
    const auto it = corpora.find(stage.corpus_id);
    ISO_CHECK_DATA(it != corpora.end(),
                   "run_plan: missing corpus \"" << stage.corpus_id << "\"");
    ISO_CHECK_DATA(!it->second.empty(),
                   "run_plan: corpus \"" << stage.corpus_id << "\" is empty");
  }

  model::ModelState state;
  if (init.has_value()) {
    state = init->clone();
  } else {
    model::ModelConfig fresh = config;
    fresh.vocab_size = vocab.size();
    fresh.variant =
        plan.stages.front().tagging ? config.variant : model::Variant::Standard;
    state = model::ModelState::init(fresh);
  }

  PlanResult result;
  std::optional<OptimizerState> opt;
  for (size_t i = 0; i < plan.stages.size(); ++i) {
    const Stage& stage = plan.stages[i];
    if (stage.tagging && state.config().variant == model::Variant::Standard) {
      state = state.clone_with_variant(config.variant);
    }
    if (!opt.has_value() || stage.config.reset_optimizer_on_finetune) {
      opt.emplace(stage.config);
    }
    const std::filesystem::path stage_dir =
        out_dir / ("stage_" + std::to_string(i + 1));
    StageResult stage_result =
        train_stage(state, corpora.at(stage.corpus_id), validation, vocab,
                    stage.config, stage.tagging, stage_dir, &*opt);
    state = std::move(stage_result.state);
    save_train_log(stage_result.log, stage_dir / "train_log.json");
    result.logs.push_back(std::move(stage_result.log));
  }

  std::vector<std::string> last_checkpoints;
  for (const EpochRecord& e : result.logs.back().epochs) {
    last_checkpoints.push_back(e.checkpoint_dir);
  }
  SelectedCheckpoint chosen = select_checkpoint(
      last_checkpoints, validation, plan.stages.back().config.batch_size);
  result.state = std::move(chosen.state);
  result.selected_epoch = chosen.index + 1;
  result.selected_checkpoint = chosen.dir;
  return result;
}

}  // namespace isochron::train

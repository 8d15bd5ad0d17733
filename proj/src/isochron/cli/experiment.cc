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

#include "isochron/cli/experiment.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "isochron/common/error.h"
#include "isochron/common/rng.h"

namespace isochron::cli {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::string& where,
                         const std::set<std::string>& allowed,
                         std::vector<std::string>& problems) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      problems.push_back(where + ": unknown key \"" + key + "\"");
    }
  }
}

// Overlays user keys onto the defaults of an existing JSON object.
nlohmann::json merged(nlohmann::json defaults, const nlohmann::json& user) {
  defaults.update(user);
  return defaults;
}

train::TrainConfig stage_config_from_json(const nlohmann::json& j,
                                          train::TrainConfig base,
                                          const std::string& where,
                                          std::vector<std::string>& problems) {
  reject_unknown_keys(j, where,
                      {"peak_lr", "warmup_steps", "batch_size", "max_epochs",
                       "adam_beta1", "adam_beta2", "adam_eps",
                       "reset_optimizer_on_finetune"},
                      problems);
  try {
    if (j.contains("peak_lr")) base.peak_lr = j.at("peak_lr").get<double>();
    if (j.contains("warmup_steps"))
      base.warmup_steps = j.at("warmup_steps").get<int64_t>();
    if (j.contains("batch_size"))
      base.batch_size = j.at("batch_size").get<int64_t>();
    if (j.contains("max_epochs"))
      base.max_epochs = j.at("max_epochs").get<int64_t>();
    if (j.contains("adam_beta1"))
      base.adam_beta1 = j.at("adam_beta1").get<double>();
    if (j.contains("adam_beta2"))
      base.adam_beta2 = j.at("adam_beta2").get<double>();
    if (j.contains("adam_eps")) base.adam_eps = j.at("adam_eps").get<double>();
    if (j.contains("reset_optimizer_on_finetune"))
      base.reset_optimizer_on_finetune =
          j.at("reset_optimizer_on_finetune").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(where + ": " + e.what());
  }
  return base;
}

train::StagePlan plan_from_json(const nlohmann::json& j, uint64_t seed,
                                model::Variant variant,
                                std::vector<std::string>& problems) {
  reject_unknown_keys(j, "plan", {"preset", "stages"}, problems);
  if (j.contains("preset") && j.contains("stages")) {
    problems.push_back("plan: give either \"preset\" or \"stages\", not both");
    return {};
  }
  train::StagePlan plan;
  if (j.contains("preset")) {
    std::string preset;
    try {
      preset = j.at("preset").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      problems.push_back(std::string("plan: ") + e.what());
      return {};
    }
    if (preset == "single") {
      plan = train::single_stage_plan(train::desk_pretrain_config(),
                                      train::desk_finetune_config());
    } else if (preset == "two_stage") {
      plan = train::two_stage_plan(train::desk_pretrain_config(),
                                   train::desk_finetune_config(),
                                   train::desk_finetune_config());
    } else {
      problems.push_back("plan: unknown preset \"" + preset +
                         "\" (expected single or two_stage)");
      return {};
    }
    if (!model::variant_uses_verbosity(variant)) {
      for (auto& stage : plan.stages) stage.tagging = false;
    }
  } else if (j.contains("stages")) {
    const auto& stages = j.at("stages");
    if (!stages.is_array() || stages.empty()) {
      problems.push_back("plan: \"stages\" must be a non-empty array");
      return {};
    }
    for (size_t i = 0; i < stages.size(); ++i) {
      const auto& sj = stages[i];
      const std::string where = "plan stage " + std::to_string(i + 1);
      if (!sj.is_object()) {
        problems.push_back(where + ": must be an object");
        continue;
      }
      reject_unknown_keys(sj, where, {"corpus", "tagging", "config"}, problems);
      train::Stage stage;
      stage.config = i == 0 ? train::desk_pretrain_config()
                            : train::desk_finetune_config();
      try {
        stage.corpus_id = sj.at("corpus").get<std::string>();
        if (sj.contains("tagging")) stage.tagging = sj.at("tagging").get<bool>();
      } catch (const nlohmann::json::exception& e) {
        problems.push_back(where + ": " + e.what());
      }
      if (sj.contains("config") && sj.at("config").is_object()) {
        stage.config = stage_config_from_json(sj.at("config"), stage.config,
                                              where + " config", problems);
      } else if (sj.contains("config")) {
        problems.push_back(where + ": \"config\" must be an object");
      }
      plan.stages.push_back(std::move(stage));
    }
  } else {
    plan = train::single_stage_plan(train::desk_pretrain_config(),
                                    train::desk_finetune_config());
    if (!model::variant_uses_verbosity(variant)) {
      for (auto& stage : plan.stages) stage.tagging = false;
    }
  }
  for (size_t i = 0; i < plan.stages.size(); ++i) {
    plan.stages[i].config.seed = derive_seed(seed, "stage", i);
  }
  return plan;
}

decode::SearchParams search_from_json(const nlohmann::json& j,
                                      std::vector<std::string>& problems) {
  reject_unknown_keys(
      j, "search", {"beam", "alpha_lp", "beta_cp", "max_steps", "nbest"},
      problems);
  decode::SearchParams params;
  try {
    if (j.contains("beam")) params.beam_size = j.at("beam").get<int>();
    if (j.contains("alpha_lp")) params.alpha_lp = j.at("alpha_lp").get<double>();
    if (j.contains("beta_cp")) params.beta_cp = j.at("beta_cp").get<double>();
    if (j.contains("max_steps")) params.max_steps = j.at("max_steps").get<int>();
    if (j.contains("nbest")) params.nbest = j.at("nbest").get<int>();
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(std::string("search: ") + e.what());
  }
  return params;
}

}  // namespace

std::vector<double> parse_alpha_sweep(const std::string& text) {
  double start = 0.0, stop = 0.0, step = 0.0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  in >> start >> c1 >> stop >> c2 >> step;
  ISO_CHECK_ARG(in && in.eof() && c1 == ':' && c2 == ':',
                "alpha sweep must look like start:stop:step, got \"" << text
                                                                     << "\"");
  ISO_CHECK_ARG(step > 0.0, "alpha sweep step must be positive, got " << step);
  ISO_CHECK_ARG(start <= stop, "alpha sweep start " << start
                                                    << " exceeds stop " << stop);
  ISO_CHECK_ARG(start >= 0.0 && stop <= 1.0,
                "alpha sweep must stay inside [0, 1], got " << text);
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double alpha = start + step * i;
    if (alpha > stop + 1e-9) break;
    grid.push_back(std::min(alpha, 1.0));
  }
  return grid;
}

ExperimentFile experiment_from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  ExperimentFile exp;
  exp.base_dir = base_dir;
  if (!j.is_object()) {
    throw ValidationError({"experiment file must be a JSON object"});
  }
  reject_unknown_keys(
      j, "experiment",
      {"seed", "out_dir", "corpora", "model", "plan", "search", "rescore"},
      problems);

  try {
    exp.seed = j.at("seed").get<uint64_t>();
  } catch (const nlohmann::json::exception&) {
    problems.push_back("experiment: \"seed\" (unsigned integer) is required");
  }
  try {
    const auto dir = j.at("out_dir").get<std::string>();
    if (dir.empty()) {
      problems.push_back("experiment: \"out_dir\" must not be empty");
    } else {
      exp.out_dir = base_dir / dir;
    }
  } catch (const nlohmann::json::exception&) {
    problems.push_back("experiment: \"out_dir\" (string) is required");
  }

  if (j.contains("corpora")) {
    const auto& cj = j.at("corpora");
    if (!cj.is_object()) {
      problems.push_back("corpora: must be an object of id -> path");
    } else {
      for (const auto& [id, path] : cj.items()) {
        if (!path.is_string() || path.get<std::string>().empty()) {
          problems.push_back("corpora: \"" + id + "\" must be a nonempty path");
        } else {
          exp.corpora[id] = base_dir / path.get<std::string>();
        }
      }
    }
  }

  if (j.contains("model")) {
    const auto& mj = j.at("model");
    if (!mj.is_object()) {
      problems.push_back("model: must be an object");
    } else {
      reject_unknown_keys(mj, "model",
                          {"layers", "model_dim", "heads", "ffn_dim", "max_len",
                           "dropout_attn", "dropout_other", "variant",
                           "share_verbosity_embedding"},
                          problems);
      try {
        exp.model = model::config_from_json(
            merged(model::to_json(model::ModelConfig{}), mj));
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
    }
  }
  // Weight initialization derives from the global seed; vocab_size is filled
  // in once the vocabulary is built.
  exp.model.seed = derive_seed(exp.seed, "model");

  exp.plan = plan_from_json(j.contains("plan") ? j.at("plan") : nlohmann::json::object(),
                            exp.seed, exp.model.variant, problems);

  if (j.contains("search")) {
    if (!j.at("search").is_object()) {
      problems.push_back("search: must be an object");
    } else {
      exp.search = search_from_json(j.at("search"), problems);
    }
  }

  if (j.contains("rescore")) {
    const auto& rj = j.at("rescore");
    if (!rj.is_object()) {
      problems.push_back("rescore: must be an object");
    } else {
      reject_unknown_keys(rj, "rescore",
                          {"scorer", "direction", "alpha", "normalize_logprob",
                           "alpha_sweep"},
                          problems);
      try {
        if (rj.contains("scorer"))
          exp.rescore.scorer =
              rescore::parse_scorer(rj.at("scorer").get<std::string>());
        if (rj.contains("direction"))
          exp.rescore.direction =
              rescore::parse_direction(rj.at("direction").get<std::string>());
        if (rj.contains("alpha")) exp.rescore.alpha = rj.at("alpha").get<double>();
        if (rj.contains("normalize_logprob"))
          exp.rescore.normalize_logprob =
              rj.at("normalize_logprob").get<bool>();
        if (rj.contains("alpha_sweep"))
          exp.alpha_sweep =
              parse_alpha_sweep(rj.at("alpha_sweep").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        problems.push_back(std::string("rescore: ") + e.what());
      } catch (const Error& e) {
        problems.push_back(std::string("rescore: ") + e.what());
      }
    }
  }

  if (!problems.empty()) throw ValidationError(problems);
  return exp;
}

ExperimentFile load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  ISO_CHECK_DATA(in.good(), "cannot read experiment file " << path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    ISO_CHECK_DATA(false,
                   "experiment file " << path.string() << ": " << e.what());
  }
  return experiment_from_json(j, path.parent_path());
}

void validate(const ExperimentFile& exp) {
  std::vector<std::string> problems;
  try {
    // vocab_size is resolved later; validate the rest of the model config.
    model::ModelConfig probe = exp.model;
    if (probe.vocab_size == 0) probe.vocab_size = data::kNumReserved + 1;
    model::validate(probe);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  try {
    train::validate_plan(exp.plan, exp.model.variant);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  try {
    decode::validate(exp.search);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  try {
    exp.rescore.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  for (const auto& stage : exp.plan.stages) {
    if (!exp.corpora.contains(stage.corpus_id)) {
      problems.push_back("plan references corpus \"" + stage.corpus_id +
                         "\" but the corpora section does not define it");
    }
  }
  if (!exp.corpora.contains("validation")) {
    problems.push_back("corpora: \"validation\" is required for training");
  }
  for (const auto& [id, path] : exp.corpora) {
    if (!std::filesystem::exists(path)) {
      problems.push_back("corpora: \"" + id + "\" path " + path.string() +
                         " does not exist");
    }
  }
  if (exp.out_dir.empty()) {
    problems.push_back("experiment: out_dir must not be empty");
  }
  if (!problems.empty()) throw ValidationError(problems);
}

}  // namespace isochron::cli

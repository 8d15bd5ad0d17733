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

#ifndef ISOCHRON_CLI_EXPERIMENT_H_
#define ISOCHRON_CLI_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isochron/decode/search.h"
#include "isochron/model/config.h"
#include "isochron/rescore/rescore.h"
#include "isochron/train/plan.h"

namespace isochron::cli {

// Declarative description of one experiment. JSON shape:
//
//   {
//     "seed": 7,
//     "out_dir": "runs/exp1",
//     "corpora": {"generic": "generic.tsv", "in_domain": "in_domain.tsv",
//                 "validation": "validation.tsv", "test": "test.tsv"},
//     "model": {"variant": "EncoderToken", "layers": 2, ...},
//     "plan": {"stages": [{"corpus": "generic", "tagging": false,
//                          "config": {"max_epochs": 10, ...}}, ...]},
//     "search": {"beam": 5, "alpha_lp": 0.5, "beta_cp": 0.0,
//                "max_steps": 256, "nbest": 1},
//     "rescore": {"scorer": "ratio", "direction": "shorten", "alpha": 0.5,
//                 "normalize_logprob": false, "alpha_sweep": "0:1:0.1"}
//   }
//
// Every section except "seed" and "out_dir" is optional and falls back to
// the defaults below. Stage configs start from desk_pretrain_config() for
// the first stage and desk_finetune_config() for later ones; individual
// keys override fields. Stage seeds are derived from the global seed, never
// written in the file. Relative paths resolve against the file's directory.
struct ExperimentFile {
  std::filesystem::path base_dir;
  std::map<std::string, std::filesystem::path> corpora;
  model::ModelConfig model;  // vocab_size is filled in from the built vocabulary
  train::StagePlan plan;
  decode::SearchParams search;
  rescore::RescoreParams rescore;
  std::vector<double> alpha_sweep;  // empty when the file names no sweep
  std::filesystem::path out_dir;
  uint64_t seed = 0;
};

// Expands "start:stop:step" into the inclusive grid start, start+step, ...
// Throws UsageError for malformed text, step <= 0, stop < start, or values
// outside [0, 1].
std::vector<double> parse_alpha_sweep(const std::string& text);

// Parses an in-memory document. `base_dir` anchors relative paths.
ExperimentFile experiment_from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir);

// Reads and parses the file. Throws DataError when unreadable or not JSON.
ExperimentFile load_experiment(const std::filesystem::path& path);

// Throws ValidationError listing every problem: unknown stage corpus ids,
// corpus files that do not exist, invalid model/search/rescore/stage
// configs, and an empty out_dir.
void validate(const ExperimentFile& exp);

}  // namespace isochron::cli

#endif  // ISOCHRON_CLI_EXPERIMENT_H_

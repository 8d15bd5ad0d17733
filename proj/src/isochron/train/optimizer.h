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

#ifndef ISOCHRON_TRAIN_OPTIMIZER_H_
#define ISOCHRON_TRAIN_OPTIMIZER_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "isochron/model/model.h"

namespace isochron::train {

struct TrainConfig {
  double peak_lr = 3e-3;        // schedule peak, reached at warmup_steps
  int64_t warmup_steps = 4000;  // desk plans scale this down to 400
  int64_t batch_size = 64;
  int64_t max_epochs = 20;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
  uint64_t seed = 0;
  // When entering a fine-tuning stage, start from fresh optimizer moments
  // and schedule step instead of carrying the previous stage's.
  bool reset_optimizer_on_finetune = true;

  // Throws UsageError listing every violated constraint.
  void validate() const;
};

// Warmup/decay learning rate: peak_lr * min(step / warmup, sqrt(warmup /
// step)). Linear up to the peak at step == warmup_steps, inverse square
// root after; continuous at the joint. step counts from 1.
double lr_schedule(int64_t step, const TrainConfig& cfg);

// Adam with first/second moments stored in f32 and all update arithmetic in
// f64, so updates are bitwise reproducible. Moment slots are keyed by
// parameter name; parameters first seen mid-run start from zero moments.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const TrainConfig& cfg)
      : beta1_(cfg.adam_beta1), beta2_(cfg.adam_beta2), eps_(cfg.adam_eps) {}

  // Applies one update at the given learning rate, reading each parameter's
  // accumulated gradient and clearing it afterwards. A parameter that
  // received no gradient this step advances its moments on a zero gradient.
  void step(const std::vector<model::ModelState::Param>& params, double lr);

  // Drops all moments and the step count, as if freshly constructed.
  void reset();

  int64_t steps_taken() const { return t_; }

 private:
  struct Slot {
    std::vector<float> m;
    std::vector<float> v;
  };

  double beta1_;
  double beta2_;
  double eps_;
  int64_t t_ = 0;
  std::unordered_map<std::string, Slot> slots_;
};

}  // namespace isochron::train

#endif  // ISOCHRON_TRAIN_OPTIMIZER_H_

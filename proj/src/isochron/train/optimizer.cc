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

#include "isochron/train/optimizer.h"

#include <cmath>
#include <cstddef>
#include <vector>

#include "isochron/common/error.h"

namespace isochron::train {

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (!(peak_lr > 0.0)) problems.push_back("peak_lr must be positive");
  if (warmup_steps < 1) problems.push_back("warmup_steps must be >= 1");
  if (batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (max_epochs < 1) problems.push_back("max_epochs must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0))
    problems.push_back("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    problems.push_back("adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) problems.push_back("adam_eps must be positive");
  if (!problems.empty()) {
    std::string message = "invalid train config:";
    for (const std::string& p : problems) message += "\n  - " + p;
    throw UsageError(message);
  }
}

double lr_schedule(int64_t step, const TrainConfig& cfg) {
  ISO_CHECK_ARG(step >= 1, "lr_schedule: step must be >= 1, got " << step);
  ISO_CHECK_ARG(cfg.warmup_steps >= 1 && cfg.peak_lr > 0.0,
                "lr_schedule: invalid config (warmup " << cfg.warmup_steps
                                                       << ", peak "
                                                       << cfg.peak_lr << ")");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(cfg.warmup_steps);
  return cfg.peak_lr * std::min(s / w, std::sqrt(w / s));
}

void AdamOptimizer::step(const std::vector<model::ModelState::Param>& params,
                         double lr) {
  ISO_CHECK_ARG(lr > 0.0, "optimizer: learning rate must be positive");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const model::ModelState::Param& param : params) {
    num::Tensor tensor = param.tensor;
    const size_t n = static_cast<size_t>(tensor.size());
    Slot& slot = slots_[param.name];
    if (slot.m.empty()) {
      slot.m.assign(n, 0.0f);
      slot.v.assign(n, 0.0f);
    }
    ISO_CHECK(slot.m.size() == n,
              "optimizer: parameter " << param.name << " changed size");
    const float* grad = tensor.has_grad() ? tensor.grad() : nullptr;
    float* data = tensor.data();
    for (size_t i = 0; i < n; ++i) {
      const double g = grad ? static_cast<double>(grad[i]) : 0.0;
      const double m = beta1_ * static_cast<double>(slot.m[i]) +
                       (1.0 - beta1_) * g;
      const double v = beta2_ * static_cast<double>(slot.v[i]) +
                       (1.0 - beta2_) * g * g;
      slot.m[i] = static_cast<float>(m);
      slot.v[i] = static_cast<float>(v);
      const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + eps_);
      data[i] = static_cast<float>(static_cast<double>(data[i]) - update);
    }
    if (tensor.has_grad()) tensor.zero_grad();
  }
}

void AdamOptimizer::reset() {
  t_ = 0;
  slots_.clear();
}

}  // namespace isochron::train

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

#ifndef ISOCHRON_TESTS_GRADCHECK_H_
#define ISOCHRON_TESTS_GRADCHECK_H_

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "isochron/numcore/graph.h"
#include "isochron/numcore/ops.h"
#include "isochron/numcore/tensor.h"

namespace isochron::testing {

// Independent oracle for reverse-mode gradients: central finite differences
// of a scalar-valued forward function. `forward` must be deterministic and
// rebuild its computation from the current parameter values on every call.
// Returns the max over parameter elements of
//   |g_ad - g_fd| / max(|g_fd|, 1).
inline double gradcheck_max_rel_error(
    const std::function<num::Tensor()>& forward,
    std::vector<num::Tensor> params, double h = 1e-3) {
  using num::Graph;
  using num::Tensor;

  std::vector<std::vector<float>> ad_grads;
  {
    Graph g;
    Graph::Scope scope(g);
    Tensor loss = forward();
    g.backward(loss, /*accumulate_into_tensors=*/false);
    for (const Tensor& p : params) {
      const float* gp = g.grad_of(p);
      std::vector<float> buf(static_cast<size_t>(p.size()), 0.0f);
      if (gp) std::memcpy(buf.data(), gp, buf.size() * sizeof(float));
      ad_grads.push_back(std::move(buf));
    }
  }

  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    float* data = p.data();
    for (int64_t i = 0; i < p.size(); ++i) {
      float saved = data[i];
      data[i] = static_cast<float>(static_cast<double>(saved) + h);
      double f_plus = static_cast<double>(forward().item());
      data[i] = static_cast<float>(static_cast<double>(saved) - h);
      double f_minus = static_cast<double>(forward().item());
      data[i] = saved;
      double fd = (f_plus - f_minus) / (2.0 * h);
      double ad = static_cast<double>(ad_grads[pi][static_cast<size_t>(i)]);
      double rel = std::fabs(ad - fd) / std::max(std::fabs(fd), 1.0);
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

}  // namespace isochron::testing

#endif  // ISOCHRON_TESTS_GRADCHECK_H_

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

#ifndef ISOCHRON_NUMCORE_OPS_H_
#define ISOCHRON_NUMCORE_OPS_H_

#include <span>
#include <vector>

#include "isochron/common/rng.h"
#include "isochron/numcore/graph.h"
#include "isochron/numcore/tensor.h"

// Differentiable tensor operations. Each op computes its forward result with
// the dispatched kernels and, when a graph scope is active and some input
// needs a gradient, records a backward closure on the tape. Without a scope
// the same functions are pure.

namespace isochron::num {

// out[m,n] = a[m,k] * b[k,n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise, shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double s);
Tensor relu(const Tensor& x);

// x[.., C] + bias[C], broadcast over leading dimensions.
Tensor add_bias(const Tensor& x, const Tensor& bias);

// Softmax along `axis` (negative counts from the end). Rows must contain at
// least one finite entry; -inf entries are legal and get probability zero.
Tensor softmax(const Tensor& x, int axis);

// Per-row (last dimension) layer norm with affine parameters.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// out[t, :] = table[ids[t], :]
Tensor embedding(const Tensor& table, std::span<const int> ids);

// Stacks a[r1, C] over b[r2, C] into [r1+r2, C].
Tensor concat_rows(const Tensor& a, const Tensor& b);

// Inverted dropout: keep with probability 1-p, scale kept values by 1/(1-p).
// Identity (same tensor handle) when train is false or p == 0.
Tensor dropout(const Tensor& x, double p, RandomStream& rng, bool train);

// Sum of all elements, as a rank-0 tensor.
Tensor sum(const Tensor& x);

// Mean negative log-likelihood over rows whose target is not pad_id.
// logits[T, V], targets.size() == T. All rows pad -> loss 0 with zero
// gradient.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets,
                     int pad_id);

struct AttentionResult {
  Tensor output;            // [Tq, D]
  std::vector<float> attn;  // [Tq * Tk], softmax probs averaged over heads
};

// Scaled dot-product attention over pre-projected q[Tq,D], k[Tk,D], v[Tk,D]
// split into `heads` column groups. causal masks j > t (requires Tq == Tk).
// Dropout applies to the probability matrices when train && p > 0.
AttentionResult multi_head_attention(const Tensor& q, const Tensor& k,
                                     const Tensor& v, int heads, bool causal,
                                     double dropout_p, RandomStream* rng,
                                     bool train);

// log softmax of one logit row, computed in double. Shared by every scoring
// path so decode-time and rescore-time log-probabilities agree bitwise.
std::vector<double> log_softmax_vec(const float* logits, size_t n);

}  // namespace isochron::num

#endif  // ISOCHRON_NUMCORE_OPS_H_

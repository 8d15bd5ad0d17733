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

#ifndef ISOCHRON_MODEL_SESSION_H_
#define ISOCHRON_MODEL_SESSION_H_

#include <optional>
#include <vector>

#include "isochron/model/model.h"

namespace isochron::model {

// Incremental decoder over one growing prefix. The constructor feeds BOS;
// each append() runs the decoder for just the new row against cached
// keys/values. After every step, logits() equals the last logits row of a
// stateless decode_step over the same prefix, bit for bit: every kernel
// reduction is length-stable, so dropping the masked score tail changes
// nothing.
//
// Inference only (no dropout, no gradients). Sessions are copyable so a
// beam search can fork hypotheses; the ModelState must outlive its sessions.
class DecoderSession {
 public:
  DecoderSession(const ModelState& model, num::Tensor encoder_states,
                 std::optional<data::Verbosity> verbosity);

  // Extends the prefix by one token id and refreshes logits()/attention_row().
  void append(int token_id);

  // The decoded prefix so far, starting with BOS.
  const std::vector<int>& prefix() const { return prefix_; }
  int64_t source_length() const { return src_len_; }

  // Next-token logits for the newest position, [vocab], verbosity columns
  // masked to -inf.
  const std::vector<float>& logits() const { return logits_; }

  // log softmax of logits(), computed by the shared scoring routine.
  std::vector<double> log_probs() const;

  // Final-layer cross-attention for the newest position, [source_len],
  // averaged over heads.
  const std::vector<float>& attention_row() const { return attn_row_; }

 private:
  struct LayerCache {
    std::vector<float> self_k, self_v;  // [prefix_len x model_dim], appended
    num::Tensor cross_k, cross_v;       // [source_len x model_dim], fixed
  };

  void run_row(int token_id, int64_t position);

  const ModelState* model_ = nullptr;
  num::Tensor encoder_states_;
  std::optional<data::Verbosity> verbosity_;
  int64_t src_len_ = 0;
  std::vector<int> prefix_;
  std::vector<LayerCache> layers_;
  std::vector<float> logits_;
  std::vector<float> attn_row_;
};

}  // namespace isochron::model

#endif  // ISOCHRON_MODEL_SESSION_H_

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

#include "isochron/model/session.h"

#include <cstring>

#include "isochron/common/error.h"
#include "isochron/numcore/ops.h"

namespace isochron::model {

using num::Tensor;

DecoderSession::DecoderSession(const ModelState& model, Tensor encoder_states,
                               std::optional<data::Verbosity> verbosity)
    : model_(&model),
      encoder_states_(std::move(encoder_states)),
      verbosity_(verbosity) {
  model.check_verbosity_arg(verbosity);
  ISO_CHECK_ARG(encoder_states_.defined() && encoder_states_.rank() == 2 &&
                    encoder_states_.dim(0) >= 1 &&
                    encoder_states_.dim(1) == model.config().model_dim,
                "session: malformed encoder states");
  src_len_ = encoder_states_.dim(0);
  layers_.resize(model.dec_.size());
  for (size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = model.dec_[l].cross_attn;
    layers_[l].cross_k =
        num::add_bias(num::matmul(encoder_states_, a.wk), a.bk);
    layers_[l].cross_v =
        num::add_bias(num::matmul(encoder_states_, a.wv), a.bv);
  }
  run_row(data::kBosId, 0);
  prefix_.push_back(data::kBosId);
}

void DecoderSession::append(int token_id) {
  const ModelConfig& cfg = model_->config();
  ISO_CHECK_ARG(static_cast<int64_t>(prefix_.size()) < cfg.max_len,
                "session: prefix already at max_len " << cfg.max_len);
  ISO_CHECK_ARG(token_id >= 0 && token_id < cfg.vocab_size,
                "session: token id " << token_id << " out of range");
  ISO_CHECK_ARG(token_id == data::kUnkId ||
                    !data::Vocabulary::is_reserved(token_id),
                "session: reserved token id " << token_id
                                              << " cannot be appended");
  run_row(token_id, static_cast<int64_t>(prefix_.size()));
  prefix_.push_back(token_id);
}

std::vector<double> DecoderSession::log_probs() const {
  return num::log_softmax_vec(logits_.data(), logits_.size());
}

void DecoderSession::run_row(int token_id, int64_t position) {
  const ModelState& m = *model_;
  const int64_t d = m.config_.model_dim;
  const int one_id[] = {token_id};
  Tensor x = num::embedding(m.token_embedding_, one_id);
  if (variant_adds_decoder_sum(m.config_.variant)) {
    const int cls[] = {static_cast<int>(*verbosity_)};
    x = num::add(x, num::embedding(m.dec_table(), cls));
  }
  const int pos[] = {static_cast<int>(position)};
  x = num::add(x, num::embedding(m.pos_, pos));

  const int64_t rows = position + 1;
  for (size_t l = 0; l < m.dec_.size(); ++l) {
    const auto& layer = m.dec_[l];
    LayerCache& cache = layers_[l];
    const bool last = l + 1 == m.dec_.size();

    // Causal self-attention: the newest row sees every cached row, so a
    // full (non-causal) single-query attention reproduces the masked row.
    Tensor h = num::layer_norm(x, layer.ln1.gain, layer.ln1.bias);
    {
      const auto& a = layer.self_attn;
      const Tensor q = num::add_bias(num::matmul(h, a.wq), a.bq);
      const Tensor k_row = num::add_bias(num::matmul(h, a.wk), a.bk);
      const Tensor v_row = num::add_bias(num::matmul(h, a.wv), a.bv);
      cache.self_k.insert(cache.self_k.end(), k_row.data(), k_row.data() + d);
      cache.self_v.insert(cache.self_v.end(), v_row.data(), v_row.data() + d);
      const Tensor k_all = Tensor::from_data({rows, d}, cache.self_k);
      const Tensor v_all = Tensor::from_data({rows, d}, cache.self_v);
      auto res = num::multi_head_attention(q, k_all, v_all, m.config_.heads,
                                           /*causal=*/false, 0.0, nullptr,
                                           /*train=*/false);
      const Tensor o = num::add_bias(num::matmul(res.output, a.wo), a.bo);
      x = num::add(x, o);
    }

    h = num::layer_norm(x, layer.ln2.gain, layer.ln2.bias);
    {
      const auto& a = layer.cross_attn;
      const Tensor q = num::add_bias(num::matmul(h, a.wq), a.bq);
      auto res = num::multi_head_attention(q, cache.cross_k, cache.cross_v,
                                           m.config_.heads, /*causal=*/false,
                                           0.0, nullptr, /*train=*/false);
      if (last) attn_row_ = std::move(res.attn);
      const Tensor o = num::add_bias(num::matmul(res.output, a.wo), a.bo);
      x = num::add(x, o);
    }

    h = num::layer_norm(x, layer.ln3.gain, layer.ln3.bias);
    {
      Tensor f = num::add_bias(num::matmul(h, layer.ffn.w1), layer.ffn.b1);
      f = num::relu(f);
      f = num::add_bias(num::matmul(f, layer.ffn.w2), layer.ffn.b2);
      x = num::add(x, f);
    }
  }

  x = num::layer_norm(x, m.dec_final_.gain, m.dec_final_.bias);
  Tensor logits = num::add_bias(num::matmul(x, m.out_w_), m.out_b_);
  if (variant_adds_output_bias(m.config_.variant)) {
    const int cls[] = {static_cast<int>(*verbosity_)};
    logits = num::add(logits, num::embedding(m.verbosity_bias_, cls));
  }
  logits_.assign(logits.data(), logits.data() + logits.size());
  mask_verbosity_logits(logits_.data(), m.config_.vocab_size);
}

}  // namespace isochron::model

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

#ifndef ISOCHRON_MODEL_MODEL_H_
#define ISOCHRON_MODEL_MODEL_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isochron/common/rng.h"
#include "isochron/data/vocab.h"
#include "isochron/model/config.h"
#include "isochron/numcore/ops.h"
#include "isochron/numcore/tensor.h"

namespace isochron::model {

struct DecodeResult {
  // [prefix_len x vocab] next-token logits per prefix position, with the
  // verbosity token columns masked to -inf.
  num::Tensor logits;
  // [prefix_len x source_len] cross-attention of the final decoder layer,
  // averaged over heads. Rows are probability distributions.
  std::vector<float> cross_attention;
};

// Pre-norm encoder-decoder transformer with sinusoidal positions and a
// selectable verbosity-conditioning variant. Weights live in named Tensors;
// the parameter list order is the checkpoint manifest order.
class ModelState {
 public:
  struct Param {
    std::string name;
    num::Tensor tensor;
  };

  ModelState() = default;

  // Seeded initialization: Xavier-uniform linear layers, unit-gain layer
  // norms, N(0,1) token embeddings, N(0,0.02) output projection, and
  // all-zero verbosity tables (every variant starts behaviorally identical
  // to Standard).
  static ModelState init(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const std::vector<Param>& parameters() const { return params_; }
  num::Tensor param(std::string_view name) const;

  // Same weights (deep copy), different conditioning variant; verbosity
  // tables of the target variant start at zero.
  ModelState clone_with_variant(Variant variant) const;
  ModelState clone() const { return clone_with_variant(config_.variant); }

  // Encoder forward. For prepend variants the verbosity token id must
  // already lead source_ids and match `verbosity`; for the other
  // conditioned variants source_ids must contain no verbosity ids.
  // Positions run 0..len-1 over exactly the given ids.
  num::Tensor encode(std::span<const int> source_ids,
                     std::optional<data::Verbosity> verbosity, bool train_mode,
                     RandomStream* rng = nullptr) const;

  // Full-prefix decoder forward (prefix must start with BOS). Returns
  // next-token logits for every prefix position, verbosity columns masked.
  DecodeResult decode_step(std::span<const int> prefix_ids,
                           const num::Tensor& encoder_states,
                           std::optional<data::Verbosity> verbosity,
                           bool train_mode, RandomStream* rng = nullptr) const;

  // Teacher-forced mean cross-entropy per target token (targets are the
  // pair's characters plus EOS). Unlike decode_step, logits are unmasked:
  // training never sees verbosity targets, decoding handles the mask.
  num::Tensor forward_loss(std::span<const data::TrainingPair> batch,
                           bool train_mode, RandomStream* rng = nullptr) const;

  // The verbosity table read by encoder/decoder embedding sites
  // ([3 x model_dim]) or the output-bias table ([3 x vocab]) for OutputBias.
  // Undefined Tensor for Standard.
  num::Tensor verbosity_table() const;
  // Decoder-side table when share_verbosity_embedding is false and the
  // variant has both sites; otherwise the same handle as verbosity_table().
  num::Tensor verbosity_table_dec() const;

  // Fixed sinusoidal position table, [max_len x model_dim]; not a parameter.
  const num::Tensor& position_table() const { return pos_; }

  int64_t parameter_count() const;

 private:
  struct Attention {
    num::Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  };
  struct Ffn {
    num::Tensor w1, b1, w2, b2;
  };
  struct Norm {
    num::Tensor gain, bias;
  };
  struct EncoderLayer {
    Norm ln1;
    Attention attn;
    Norm ln2;
    Ffn ffn;
  };
  struct DecoderLayer {
    Norm ln1;
    Attention self_attn;
    Norm ln2;
    Attention cross_attn;
    Norm ln3;
    Ffn ffn;
  };

  void build(const ModelConfig& config);  // allocates zeros + registry
  void check_verbosity_arg(std::optional<data::Verbosity> verbosity) const;
  void check_source(std::span<const int> source_ids,
                    std::optional<data::Verbosity> verbosity) const;
  num::Tensor pe_rows(int64_t len) const;
  num::Tensor dec_table() const;  // decoder-side verbosity table
  num::Tensor attention_block(const num::Tensor& x_normed, const num::Tensor& kv,
                              const Attention& a, bool causal, bool train_mode,
                              RandomStream* rng,
                              std::vector<float>* attn_out) const;
  num::Tensor ffn_block(const num::Tensor& x_normed, const Ffn& f,
                        bool train_mode, RandomStream* rng) const;
  // Unmasked decoder forward shared by decode_step and forward_loss.
  num::Tensor decoder_forward(std::span<const int> prefix_ids,
                              const num::Tensor& encoder_states,
                              std::optional<data::Verbosity> verbosity,
                              bool train_mode, RandomStream* rng,
                              std::vector<float>* attn_out) const;
  friend class DecoderSession;

  ModelConfig config_;
  num::Tensor token_embedding_;  // [vocab x model_dim]
  std::vector<EncoderLayer> enc_;
  Norm enc_final_;
  std::vector<DecoderLayer> dec_;
  Norm dec_final_;
  num::Tensor out_w_;  // [model_dim x vocab]
  num::Tensor out_b_;  // [vocab]
  num::Tensor verbosity_embedding_;      // [3 x model_dim] when present
  num::Tensor verbosity_embedding_dec_;  // only when unshared two-site variant
  num::Tensor verbosity_bias_;           // [3 x vocab] for OutputBias
  num::Tensor pos_;                      // [max_len x model_dim], fixed
  std::vector<Param> params_;
};

// Sets the three verbosity token columns to -inf in place.
void mask_verbosity_logits(float* logits_row, int vocab_size);

}  // namespace isochron::model

#endif  // ISOCHRON_MODEL_MODEL_H_

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

#include "isochron/model/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "isochron/common/error.h"

namespace isochron::model {
namespace {

using num::Tensor;

enum class InitKind { Gain, Bias, Linear, TokenEmbedding, OutProj, Verbosity };

InitKind classify_param(std::string_view name) {
  if (name == "token_embedding") return InitKind::TokenEmbedding;
  if (name == "out.w") return InitKind::OutProj;
  if (name.starts_with("verbosity")) return InitKind::Verbosity;
  const size_t dot = name.rfind('.');
  const std::string_view leaf = dot == std::string_view::npos
                                    ? name
                                    : name.substr(dot + 1);
  if (leaf == "gain") return InitKind::Gain;
  if (!leaf.empty() && leaf[0] == 'b') return InitKind::Bias;
  return InitKind::Linear;
}

bool is_verbosity_id(int id) {
  return id == data::kVShortId || id == data::kVNormalId || id == data::kVLongId;
}

std::vector<int> class_ids(int64_t len, data::Verbosity v) {
  return std::vector<int>(static_cast<size_t>(len), static_cast<int>(v));
}

Tensor maybe_dropout(const Tensor& x, double p, RandomStream* rng, bool train) {
  if (!train || p == 0.0) return x;
  ISO_CHECK_ARG(rng != nullptr, "train_mode forward pass requires an RNG");
  return num::dropout(x, p, *rng, true);
}

}  // namespace

void mask_verbosity_logits(float* logits_row, int vocab_size) {
  ISO_CHECK_ARG(vocab_size > data::kVLongId, "vocab too small for reserved ids");
  const float ninf = -std::numeric_limits<float>::infinity();
  logits_row[data::kVShortId] = ninf;
  logits_row[data::kVNormalId] = ninf;
  logits_row[data::kVLongId] = ninf;
}

void ModelState::build(const ModelConfig& config) {
  validate(config);
  config_ = config;
  params_.clear();
  const int64_t d = config.model_dim;
  const int64_t f = config.ffn_dim;
  const int64_t v = config.vocab_size;

  auto make = [this](const std::string& name, std::vector<int64_t> shape) {
    Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
    params_.push_back({name, t});
    return t;
  };
  auto make_norm = [&make](const std::string& prefix, int64_t dim) {
    Norm n;
    n.gain = make(prefix + ".gain", {dim});
    n.bias = make(prefix + ".bias", {dim});
    return n;
  };
  auto make_attention = [&make, d](const std::string& prefix) {
    Attention a;
    a.wq = make(prefix + ".wq", {d, d});
    a.bq = make(prefix + ".bq", {d});
    a.wk = make(prefix + ".wk", {d, d});
    a.bk = make(prefix + ".bk", {d});
    a.wv = make(prefix + ".wv", {d, d});
    a.bv = make(prefix + ".bv", {d});
    a.wo = make(prefix + ".wo", {d, d});
    a.bo = make(prefix + ".bo", {d});
    return a;
  };
  auto make_ffn = [&make, d, f](const std::string& prefix) {
    Ffn n;
    n.w1 = make(prefix + ".w1", {d, f});
    n.b1 = make(prefix + ".b1", {f});
    n.w2 = make(prefix + ".w2", {f, d});
    n.b2 = make(prefix + ".b2", {d});
    return n;
  };

  token_embedding_ = make("token_embedding", {v, d});
  enc_.clear();
  for (int i = 0; i < config.layers; ++i) {
    const std::string p = "enc." + std::to_string(i);
    EncoderLayer layer;
    layer.ln1 = make_norm(p + ".ln1", d);
    layer.attn = make_attention(p + ".attn");
    layer.ln2 = make_norm(p + ".ln2", d);
    layer.ffn = make_ffn(p + ".ffn");
    enc_.push_back(layer);
  }
  enc_final_ = make_norm("enc.final", d);
  dec_.clear();
  for (int i = 0; i < config.layers; ++i) {
    const std::string p = "dec." + std::to_string(i);
    DecoderLayer layer;
    layer.ln1 = make_norm(p + ".ln1", d);
    layer.self_attn = make_attention(p + ".self");
    layer.ln2 = make_norm(p + ".ln2", d);
    layer.cross_attn = make_attention(p + ".cross");
    layer.ln3 = make_norm(p + ".ln3", d);
    layer.ffn = make_ffn(p + ".ffn");
    dec_.push_back(layer);
  }
  dec_final_ = make_norm("dec.final", d);
  out_w_ = make("out.w", {d, v});
  out_b_ = make("out.b", {v});

  verbosity_embedding_ = Tensor();
  verbosity_embedding_dec_ = Tensor();
  verbosity_bias_ = Tensor();
  const Variant var = config.variant;
  if (variant_adds_output_bias(var)) {
    verbosity_bias_ = make("verbosity_bias", {data::kNumVerbosityClasses, v});
  } else if (variant_uses_verbosity(var)) {
    verbosity_embedding_ =
        make("verbosity_embedding", {data::kNumVerbosityClasses, d});
    const bool two_sites = (variant_prepends_token(var) ||
                            variant_adds_encoder_sum(var)) &&
                           variant_adds_decoder_sum(var);
    if (two_sites && !config.share_verbosity_embedding) {
      verbosity_embedding_dec_ =
          make("verbosity_embedding_dec", {data::kNumVerbosityClasses, d});
    }
  }

  // Fixed sinusoidal position table.
  pos_ = Tensor::zeros({config.max_len, d});
  float* pe = pos_.data();
  for (int64_t t = 0; t < config.max_len; ++t) {
    for (int64_t i = 0; i < d; i += 2) {
      const double angle =
          static_cast<double>(t) /
          std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      pe[t * d + i] = static_cast<float>(std::sin(angle));
      if (i + 1 < d) pe[t * d + i + 1] = static_cast<float>(std::cos(angle));
    }
  }
}

ModelState ModelState::init(const ModelConfig& config) {
  ModelState state;
  state.build(config);
  RandomStream rng(derive_seed(config.seed, "init"));
  for (auto& p : state.params_) {
    float* out = p.tensor.data();
    const int64_t n = p.tensor.size();
    switch (classify_param(p.name)) {
      case InitKind::Gain:
        std::fill(out, out + n, 1.0f);
        break;
      case InitKind::Bias:
      case InitKind::Verbosity:
        break;  // zeros
      case InitKind::TokenEmbedding:
        for (int64_t i = 0; i < n; ++i)
          out[i] = static_cast<float>(rng.normal());
        break;
      case InitKind::OutProj:
        for (int64_t i = 0; i < n; ++i)
          out[i] = static_cast<float>(rng.normal(0.0, 0.02));
        break;
      case InitKind::Linear: {
        const int64_t fan_in = p.tensor.dim(0);
        const int64_t fan_out = p.tensor.dim(1);
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (int64_t i = 0; i < n; ++i)
          out[i] = static_cast<float>(rng.uniform(-a, a));
        break;
      }
    }
  }
  return state;
}

Tensor ModelState::param(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw UsageError("no parameter named \"" + std::string(name) + "\"");
}

ModelState ModelState::clone_with_variant(Variant variant) const {
  ModelConfig cfg = config_;
  cfg.variant = variant;
  ModelState out;
  out.build(cfg);
  std::unordered_map<std::string_view, const Tensor*> source;
  for (const auto& p : params_) source.emplace(p.name, &p.tensor);
  for (auto& p : out.params_) {
    const auto it = source.find(p.name);
    if (it == source.end()) continue;  // fresh (zero) verbosity table
    ISO_CHECK(it->second->shape() == p.tensor.shape(),
              "clone_with_variant: shape mismatch for " << p.name);
    std::memcpy(p.tensor.data(), it->second->data(),
                sizeof(float) * static_cast<size_t>(p.tensor.size()));
  }
  return out;
}

int64_t ModelState::parameter_count() const {
  return std::accumulate(params_.begin(), params_.end(), int64_t{0},
                         [](int64_t acc, const Param& p) {
                           return acc + p.tensor.size();
                         });
}

Tensor ModelState::verbosity_table() const {
  if (verbosity_bias_.defined()) return verbosity_bias_;
  return verbosity_embedding_;
}

Tensor ModelState::verbosity_table_dec() const {
  if (verbosity_embedding_dec_.defined()) return verbosity_embedding_dec_;
  return verbosity_embedding_;
}

Tensor ModelState::dec_table() const {
  return verbosity_embedding_dec_.defined() ? verbosity_embedding_dec_
                                            : verbosity_embedding_;
}

Tensor ModelState::pe_rows(int64_t len) const {
  std::vector<int> positions(static_cast<size_t>(len));
  std::iota(positions.begin(), positions.end(), 0);
  return num::embedding(pos_, positions);
}

void ModelState::check_verbosity_arg(
    std::optional<data::Verbosity> verbosity) const {
  if (variant_uses_verbosity(config_.variant)) {
    ISO_CHECK_ARG(verbosity.has_value(),
                  "variant " << to_string(config_.variant)
                             << " requires a verbosity class");
  } else {
    ISO_CHECK_ARG(!verbosity.has_value(),
                  "variant Standard takes no verbosity class");
  }
}

void ModelState::check_source(std::span<const int> source_ids,
                              std::optional<data::Verbosity> verbosity) const {
  check_verbosity_arg(verbosity);
  ISO_CHECK_ARG(!source_ids.empty(), "encode: empty source");
  ISO_CHECK_ARG(static_cast<int64_t>(source_ids.size()) <= config_.max_len,
                "encode: source length " << source_ids.size()
                                         << " exceeds max_len " << config_.max_len);
  size_t first_char = 0;
  if (variant_prepends_token(config_.variant)) {
    ISO_CHECK_ARG(source_ids[0] == data::verbosity_token_id(*verbosity),
                  "encode: prepended verbosity token does not match the "
                  "requested class");
    first_char = 1;
    ISO_CHECK_ARG(source_ids.size() > 1, "encode: only a verbosity tag, no source");
  }
  for (size_t i = first_char; i < source_ids.size(); ++i) {
    const int id = source_ids[i];
    ISO_CHECK_ARG(id >= 0 && id < config_.vocab_size,
                  "encode: token id " << id << " out of range");
    ISO_CHECK_ARG(!is_verbosity_id(id),
                  "encode: unexpected verbosity token inside the source");
    ISO_CHECK_ARG(id != data::kPadId && id != data::kBosId && id != data::kEosId,
                  "encode: reserved framing token in the source");
  }
}

Tensor ModelState::attention_block(const Tensor& x_normed, const Tensor& kv,
                                   const Attention& a, bool causal,
                                   bool train_mode, RandomStream* rng,
                                   std::vector<float>* attn_out) const {
  const Tensor q = num::add_bias(num::matmul(x_normed, a.wq), a.bq);
  const Tensor k = num::add_bias(num::matmul(kv, a.wk), a.bk);
  const Tensor v = num::add_bias(num::matmul(kv, a.wv), a.bv);
  auto res = num::multi_head_attention(q, k, v, config_.heads, causal,
                                       config_.dropout_attn, rng, train_mode);
  if (attn_out != nullptr) *attn_out = std::move(res.attn);
  const Tensor o = num::add_bias(num::matmul(res.output, a.wo), a.bo);
  return maybe_dropout(o, config_.dropout_other, rng, train_mode);
}

Tensor ModelState::ffn_block(const Tensor& x_normed, const Ffn& f,
                             bool train_mode, RandomStream* rng) const {
  Tensor h = num::add_bias(num::matmul(x_normed, f.w1), f.b1);
  h = num::relu(h);
  h = num::add_bias(num::matmul(h, f.w2), f.b2);
  return maybe_dropout(h, config_.dropout_other, rng, train_mode);
}

Tensor ModelState::encode(std::span<const int> source_ids,
                          std::optional<data::Verbosity> verbosity,
                          bool train_mode, RandomStream* rng) const {
  check_source(source_ids, verbosity);
  ISO_CHECK_ARG(!train_mode || rng != nullptr,
                "encode: train_mode requires an RNG");
  const int64_t len = static_cast<int64_t>(source_ids.size());

  Tensor emb;
  if (variant_prepends_token(config_.variant)) {
    const int cls[] = {static_cast<int>(*verbosity)};
    const Tensor tag_row = num::embedding(verbosity_embedding_, cls);
    const Tensor chars = num::embedding(token_embedding_, source_ids.subspan(1));
    emb = num::concat_rows(tag_row, chars);
  } else {
    emb = num::embedding(token_embedding_, source_ids);
    if (variant_adds_encoder_sum(config_.variant)) {
      emb = num::add(
          emb, num::embedding(verbosity_embedding_, class_ids(len, *verbosity)));
    }
  }
  Tensor x = num::add(emb, pe_rows(len));
  x = maybe_dropout(x, config_.dropout_other, rng, train_mode);

  for (const auto& layer : enc_) {
    Tensor h = num::layer_norm(x, layer.ln1.gain, layer.ln1.bias);
    x = num::add(x, attention_block(h, h, layer.attn, /*causal=*/false,
                                    train_mode, rng, nullptr));
    h = num::layer_norm(x, layer.ln2.gain, layer.ln2.bias);
    x = num::add(x, ffn_block(h, layer.ffn, train_mode, rng));
  }
  return num::layer_norm(x, enc_final_.gain, enc_final_.bias);
}

Tensor ModelState::decoder_forward(std::span<const int> prefix_ids,
                                   const num::Tensor& encoder_states,
                                   std::optional<data::Verbosity> verbosity,
                                   bool train_mode, RandomStream* rng,
                                   std::vector<float>* attn_out) const {
  check_verbosity_arg(verbosity);
  ISO_CHECK_ARG(!train_mode || rng != nullptr,
                "decode: train_mode requires an RNG");
  ISO_CHECK_ARG(!prefix_ids.empty() && prefix_ids[0] == data::kBosId,
                "decode: prefix must start with BOS");
  ISO_CHECK_ARG(static_cast<int64_t>(prefix_ids.size()) <= config_.max_len,
                "decode: prefix length " << prefix_ids.size()
                                         << " exceeds max_len " << config_.max_len);
  for (size_t i = 1; i < prefix_ids.size(); ++i) {
    const int id = prefix_ids[i];
    ISO_CHECK_ARG(id >= 0 && id < config_.vocab_size,
                  "decode: token id " << id << " out of range");
    ISO_CHECK_ARG(id == data::kUnkId || !data::Vocabulary::is_reserved(id),
                  "decode: reserved token id " << id << " inside the prefix");
  }
  ISO_CHECK_ARG(encoder_states.defined() && encoder_states.rank() == 2 &&
                    encoder_states.dim(1) == config_.model_dim,
                "decode: malformed encoder states");

  const int64_t len = static_cast<int64_t>(prefix_ids.size());
  Tensor emb = num::embedding(token_embedding_, prefix_ids);
  if (variant_adds_decoder_sum(config_.variant)) {
    emb = num::add(emb, num::embedding(dec_table(), class_ids(len, *verbosity)));
  }
  Tensor x = num::add(emb, pe_rows(len));
  x = maybe_dropout(x, config_.dropout_other, rng, train_mode);

  for (size_t l = 0; l < dec_.size(); ++l) {
    const auto& layer = dec_[l];
    const bool last = l + 1 == dec_.size();
    Tensor h = num::layer_norm(x, layer.ln1.gain, layer.ln1.bias);
    x = num::add(x, attention_block(h, h, layer.self_attn, /*causal=*/true,
                                    train_mode, rng, nullptr));
    h = num::layer_norm(x, layer.ln2.gain, layer.ln2.bias);
    x = num::add(x, attention_block(h, encoder_states, layer.cross_attn,
                                    /*causal=*/false, train_mode, rng,
                                    last ? attn_out : nullptr));
    h = num::layer_norm(x, layer.ln3.gain, layer.ln3.bias);
    x = num::add(x, ffn_block(h, layer.ffn, train_mode, rng));
  }
  x = num::layer_norm(x, dec_final_.gain, dec_final_.bias);

  Tensor logits = num::add_bias(num::matmul(x, out_w_), out_b_);
  if (variant_adds_output_bias(config_.variant)) {
    logits = num::add(logits,
                      num::embedding(verbosity_bias_, class_ids(len, *verbosity)));
  }
  return logits;
}

DecodeResult ModelState::decode_step(std::span<const int> prefix_ids,
                                     const num::Tensor& encoder_states,
                                     std::optional<data::Verbosity> verbosity,
                                     bool train_mode, RandomStream* rng) const {
  DecodeResult result;
  const Tensor raw = decoder_forward(prefix_ids, encoder_states, verbosity,
                                     train_mode, rng, &result.cross_attention);
  // Inference-facing copy with verbosity tokens masked out of the
  // distribution; gradients do not flow through decode_step.
  Tensor masked = Tensor::from_data(
      raw.shape(), std::vector<float>(raw.data(), raw.data() + raw.size()));
  for (int64_t t = 0; t < masked.dim(0); ++t) {
    mask_verbosity_logits(masked.data() + t * masked.dim(1), config_.vocab_size);
  }
  result.logits = masked;
  return result;
}

Tensor ModelState::forward_loss(std::span<const data::TrainingPair> batch,
                                bool train_mode, RandomStream* rng) const {
  ISO_CHECK_ARG(!batch.empty(), "forward_loss: empty batch");
  const Variant var = config_.variant;
  int64_t total_targets = 0;
  for (const auto& pair : batch) {
    if (variant_uses_verbosity(var)) {
      ISO_CHECK_ARG(pair.verbosity.has_value(),
                    "forward_loss: untagged pair for variant " << to_string(var));
    }
    for (const int id : pair.target_ids) {
      ISO_CHECK_ARG(id == data::kUnkId || !data::Vocabulary::is_reserved(id),
                    "forward_loss: reserved token id " << id << " in target");
    }
    total_targets += static_cast<int64_t>(pair.target_ids.size()) + 1;  // EOS
  }

  Tensor loss;
  for (const auto& pair : batch) {
    const std::optional<data::Verbosity> v =
        variant_uses_verbosity(var) ? pair.verbosity : std::nullopt;
    const Tensor enc_states =
        encode(pair.source_ids, v, train_mode, rng);
    std::vector<int> prefix;
    prefix.reserve(pair.target_ids.size() + 1);
    prefix.push_back(data::kBosId);
    prefix.insert(prefix.end(), pair.target_ids.begin(), pair.target_ids.end());
    std::vector<int> targets(pair.target_ids.begin(), pair.target_ids.end());
    targets.push_back(data::kEosId);

    const Tensor logits = decoder_forward(prefix, enc_states, v, train_mode,
                                          rng, nullptr);
    const Tensor ce = num::cross_entropy(logits, targets, data::kPadId);
    const double weight = static_cast<double>(targets.size()) /
                          static_cast<double>(total_targets);
    const Tensor term = num::scale(ce, weight);
    loss = loss.defined() ? num::add(loss, term) : term;
  }
  return loss;
}

}  // namespace isochron::model

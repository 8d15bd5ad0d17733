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

#ifndef ISOCHRON_MODEL_CONFIG_H_
#define ISOCHRON_MODEL_CONFIG_H_

#include <cstdint>
#include <string_view>

#include "nlohmann/json.hpp"

#include "isochron/data/vocab.h"

namespace isochron::model {

// How the requested verbosity class reaches the network.
//   Standard      no conditioning
//   EncTok        verbosity token prepended to the source sequence
//   EncSum        E(v) added to every encoder input embedding
//   DecEmb        E(v) added to every decoder input embedding
//   EncDecEmb     EncSum and DecEmb together
//   EncTokDecEmb  EncTok and DecEmb together
//   OutputBias    class-specific bias added to the output logits
enum class Variant {
  Standard,
  EncTok,
  EncSum,
  DecEmb,
  EncDecEmb,
  EncTokDecEmb,
  OutputBias,
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);  // case-insensitive

bool variant_uses_verbosity(Variant v);   // everything except Standard
bool variant_prepends_token(Variant v);   // EncTok, EncTokDecEmb
bool variant_adds_encoder_sum(Variant v); // EncSum, EncDecEmb
bool variant_adds_decoder_sum(Variant v); // DecEmb, EncDecEmb, EncTokDecEmb
bool variant_adds_output_bias(Variant v); // OutputBias

// Source-side tagging a variant expects from the data pipeline.
data::TagPlacement placement_for(Variant v);

struct ModelConfig {
  int layers = 2;
  int model_dim = 64;
  int heads = 4;
  int ffn_dim = 256;
  int vocab_size = 0;
  int max_len = 256;
  double dropout_attn = 0.1;
  double dropout_other = 0.3;
  Variant variant = Variant::Standard;
  // Whether one verbosity table serves every injection site; with false,
  // variants with both encoder- and decoder-side sites learn a second table
  // for the decoder.
  bool share_verbosity_embedding = true;
  uint64_t seed = 0;

  bool operator==(const ModelConfig&) const = default;
};

// Throws ValidationError listing every problem.
void validate(const ModelConfig& config);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

}  // namespace isochron::model

#endif  // ISOCHRON_MODEL_CONFIG_H_

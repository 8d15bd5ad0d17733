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

#include "isochron/model/config.h"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <string>
#include <vector>

#include "isochron/common/error.h"

namespace isochron::model {
namespace {

constexpr struct {
  Variant variant;
  const char* name;
} kVariantNames[] = {
    {Variant::Standard, "Standard"},     {Variant::EncTok, "EncTok"},
    {Variant::EncSum, "EncSum"},         {Variant::DecEmb, "DecEmb"},
    {Variant::EncDecEmb, "EncDecEmb"},   {Variant::EncTokDecEmb, "EncTokDecEmb"},
    {Variant::OutputBias, "OutputBias"},
};

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& entry : kVariantNames) {
    if (entry.variant == v) return entry.name;
  }
  throw UsageError("invalid Variant value");
}

Variant parse_variant(std::string_view name) {
  const std::string low = lowercase(name);
  for (const auto& entry : kVariantNames) {
    if (low == lowercase(entry.name)) return entry.variant;
  }
  std::string known;
  for (const auto& entry : kVariantNames) {
    if (!known.empty()) known += "|";
    known += entry.name;
  }
  throw DataError("unknown model variant \"" + std::string(name) + "\" (want " +
                  known + ")");
}

bool variant_uses_verbosity(Variant v) { return v != Variant::Standard; }

bool variant_prepends_token(Variant v) {
  return v == Variant::EncTok || v == Variant::EncTokDecEmb;
}

bool variant_adds_encoder_sum(Variant v) {
  return v == Variant::EncSum || v == Variant::EncDecEmb;
}

bool variant_adds_decoder_sum(Variant v) {
  return v == Variant::DecEmb || v == Variant::EncDecEmb ||
         v == Variant::EncTokDecEmb;
}

bool variant_adds_output_bias(Variant v) { return v == Variant::OutputBias; }

data::TagPlacement placement_for(Variant v) {
  return variant_prepends_token(v) ? data::TagPlacement::PrependSource
                                   : data::TagPlacement::None;
}

void validate(const ModelConfig& config) {
  std::vector<std::string> problems;
  auto require = [&problems](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  require(config.layers >= 1, "layers must be >= 1");
  require(config.model_dim >= 1, "model_dim must be >= 1");
  require(config.heads >= 1, "heads must be >= 1");
  require(config.ffn_dim >= 1, "ffn_dim must be >= 1");
  if (config.model_dim >= 1 && config.heads >= 1) {
    require(config.model_dim % config.heads == 0,
            "model_dim must be divisible by heads");
  }
  require(config.vocab_size > data::kNumReserved,
          "vocab_size must exceed the reserved id count");
  require(config.max_len >= 2, "max_len must be >= 2");
  require(config.dropout_attn >= 0.0 && config.dropout_attn < 1.0,
          "dropout_attn must be in [0, 1)");
  require(config.dropout_other >= 0.0 && config.dropout_other < 1.0,
          "dropout_other must be in [0, 1)");
  if (!problems.empty()) throw ValidationError(problems);
}

nlohmann::json to_json(const ModelConfig& config) {
  return {{"layers", config.layers},
          {"model_dim", config.model_dim},
          {"heads", config.heads},
          {"ffn_dim", config.ffn_dim},
          {"vocab_size", config.vocab_size},
          {"max_len", config.max_len},
          {"dropout_attn", config.dropout_attn},
          {"dropout_other", config.dropout_other},
          {"variant", std::string(to_string(config.variant))},
          {"share_verbosity_embedding", config.share_verbosity_embedding},
          {"seed", config.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ISO_CHECK_DATA(j.is_object(), "model config JSON must be an object");
  ModelConfig config;
  try {
    config.layers = j.at("layers").get<int>();
    config.model_dim = j.at("model_dim").get<int>();
    config.heads = j.at("heads").get<int>();
    config.ffn_dim = j.at("ffn_dim").get<int>();
    config.vocab_size = j.at("vocab_size").get<int>();
    config.max_len = j.at("max_len").get<int>();
    config.dropout_attn = j.at("dropout_attn").get<double>();
    config.dropout_other = j.at("dropout_other").get<double>();
    config.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("share_verbosity_embedding")) {
      config.share_verbosity_embedding =
          j.at("share_verbosity_embedding").get<bool>();
    }
    config.seed = j.at("seed").get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    ISO_CHECK_DATA(false, "model config JSON: " << e.what());
  }
  return config;
}

}  // namespace isochron::model

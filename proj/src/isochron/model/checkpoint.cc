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

#include "isochron/model/checkpoint.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "isochron/common/error.h"
#include "isochron/model/config.h"
#include "nlohmann/json.hpp"

namespace isochron::model {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'I', 'S', 'O', 'W', 'G', 'T', '0', '1'};
constexpr int kFormatVersion = 1;

std::filesystem::path config_path(const std::string& dir) {
  return std::filesystem::path(dir) / "config.json";
}

std::filesystem::path weights_path(const std::string& dir) {
  return std::filesystem::path(dir) / "weights.bin";
}

const json& require_key(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  ISO_CHECK_DATA(it != j.end(), where << ": missing key \"" << key << "\"");
  return *it;
}

}  // namespace

void save_model(const ModelState& state, const data::Vocabulary& vocab,
                const std::string& dir) {
  ISO_CHECK_ARG(static_cast<int>(vocab.size()) == state.config().vocab_size,
                "save_model: vocabulary size " << vocab.size()
                                               << " does not match config "
                                               << state.config().vocab_size);
  std::filesystem::create_directories(dir);

  json manifest = json::array();
  int64_t offset = sizeof(kMagic);
  for (const auto& p : state.parameters()) {
    json entry;
    entry["name"] = p.name;
    entry["shape"] = p.tensor.shape();
    entry["offset"] = offset;
    manifest.push_back(std::move(entry));
    offset += p.tensor.size() * static_cast<int64_t>(sizeof(float));
  }

  json root;
  root["format_version"] = kFormatVersion;
  root["config"] = to_json(state.config());
  root["vocabulary"] = vocab.to_json();
  root["manifest"] = std::move(manifest);

  {
    std::ofstream out(config_path(dir));
    ISO_CHECK_DATA(out.good(), "save_model: cannot write " << config_path(dir));
    out << root.dump(2) << "\n";
    ISO_CHECK_DATA(out.good(), "save_model: write failed for config.json");
  }
  {
    std::ofstream out(weights_path(dir), std::ios::binary);
    ISO_CHECK_DATA(out.good(),
                   "save_model: cannot write " << weights_path(dir));
    out.write(kMagic, sizeof(kMagic));
    for (const auto& p : state.parameters()) {
      out.write(reinterpret_cast<const char*>(p.tensor.data()),
                p.tensor.size() * static_cast<int64_t>(sizeof(float)));
    }
    ISO_CHECK_DATA(out.good(), "save_model: write failed for weights.bin");
  }
}

LoadedModel load_model(const std::string& dir) {
  std::ifstream cfg_in(config_path(dir));
  ISO_CHECK_DATA(cfg_in.good(),
                 "load_model: cannot open " << config_path(dir));
  json root;
  try {
    root = json::parse(cfg_in);
  } catch (const json::exception& e) {
    throw DataError("load_model: malformed config.json: " +
                    std::string(e.what()));
  }

  const json& version = require_key(root, "format_version", "config.json");
  ISO_CHECK_DATA(version.is_number_integer() &&
                     version.get<int>() == kFormatVersion,
                 "config.json: unsupported format_version " << version.dump());
  const ModelConfig config =
      config_from_json(require_key(root, "config", "config.json"));
  data::Vocabulary vocab =
      data::Vocabulary::from_json(require_key(root, "vocabulary", "config.json"));
  ISO_CHECK_DATA(static_cast<int>(vocab.size()) == config.vocab_size,
                 "config.json: vocabulary has " << vocab.size()
                                                << " entries but config says "
                                                << config.vocab_size);

  ModelState state = ModelState::init(config);
  const json& manifest = require_key(root, "manifest", "config.json");
  ISO_CHECK_DATA(manifest.is_array() &&
                     manifest.size() == state.parameters().size(),
                 "config.json: manifest lists " << manifest.size()
                                                << " tensors, model has "
                                                << state.parameters().size());

  std::ifstream in(weights_path(dir), std::ios::binary);
  ISO_CHECK_DATA(in.good(), "load_model: cannot open " << weights_path(dir));
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  ISO_CHECK_DATA(in.gcount() == sizeof(magic) &&
                     std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
                 "weights.bin: wrong magic bytes");

  int64_t offset = sizeof(kMagic);
  for (size_t i = 0; i < state.parameters().size(); ++i) {
    const auto& p = state.parameters()[i];
    const json& entry = manifest[i];
    const std::string name = require_key(entry, "name", "manifest").get<std::string>();
    const auto shape =
        require_key(entry, "shape", "manifest").get<std::vector<int64_t>>();
    const int64_t entry_offset =
        require_key(entry, "offset", "manifest").get<int64_t>();
    ISO_CHECK_DATA(name == p.name, "manifest entry " << i << " names \"" << name
                                                     << "\", model expects \""
                                                     << p.name << "\"");
    ISO_CHECK_DATA(shape == p.tensor.shape(),
                   "manifest shape for " << name << " is "
                                         << num::shape_to_string(shape)
                                         << ", model expects "
                                         << p.tensor.shape_str());
    ISO_CHECK_DATA(entry_offset == offset,
                   "manifest offset for " << name << " is " << entry_offset
                                          << ", expected " << offset);
    num::Tensor t = p.tensor;
    const int64_t bytes = t.size() * static_cast<int64_t>(sizeof(float));
    in.read(reinterpret_cast<char*>(t.data()), bytes);
    ISO_CHECK_DATA(in.gcount() == bytes,
                   "weights.bin: truncated while reading " << name);
    offset += bytes;
  }
  in.peek();
  ISO_CHECK_DATA(in.eof(), "weights.bin: trailing bytes after last tensor");
  return {std::move(state), std::move(vocab)};
}

}  // namespace isochron::model

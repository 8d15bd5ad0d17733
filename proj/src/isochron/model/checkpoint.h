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

#ifndef ISOCHRON_MODEL_CHECKPOINT_H_
#define ISOCHRON_MODEL_CHECKPOINT_H_

#include <string>

#include "isochron/data/vocab.h"
#include "isochron/model/model.h"

namespace isochron::model {

struct LoadedModel {
  ModelState state;
  data::Vocabulary vocab;
};

// Writes a checkpoint directory: config.json (format_version, ModelConfig,
// vocabulary, weight manifest) and weights.bin (8-byte magic "ISOWGT01",
// then raw little-endian f32 in manifest order; offsets are absolute).
// The directory is created if needed; existing files are overwritten.
void save_model(const ModelState& state, const data::Vocabulary& vocab,
                const std::string& dir);

// Reads a checkpoint directory back. Round-tripping is bitwise exact.
// Raises DataError for missing files, bad magic, truncated weights, version
// or manifest mismatches, and malformed JSON.
LoadedModel load_model(const std::string& dir);

}  // namespace isochron::model

#endif  // ISOCHRON_MODEL_CHECKPOINT_H_

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

#include "isochron/decode/nbest.h"

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "isochron/common/error.h"

namespace isochron::decode {

using nlohmann::json;

void save_nbest(const std::vector<NBestEntry>& entries,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  ISO_CHECK_DATA(out.good(), "cannot open " << path << " for writing");
  for (const NBestEntry& entry : entries) {
    json hyps = json::array();
    for (const Hypothesis& h : entry.list.hypotheses) {
      json jh = {{"text", h.text},
                 {"logprob", h.sum_logprob},
                 {"chars", h.char_len},
                 {"score", h.score}};
      if (h.forced_eos) jh["forced_eos"] = true;
      if (h.rescored.has_value()) jh["rescored"] = *h.rescored;
      hyps.push_back(std::move(jh));
    }
    const json line = {{"id", entry.id},
                       {"source", entry.list.source},
                       {"source_chars", entry.list.source_chars},
                       {"hypotheses", std::move(hyps)}};
    out << line.dump() << "\n";
  }
  out.flush();
  ISO_CHECK_DATA(out.good(), "failed writing " << path);
}

std::vector<NBestEntry> load_nbest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  ISO_CHECK_DATA(in.good(), "cannot open " << path);
  std::vector<NBestEntry> entries;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      NBestEntry entry;
      entry.id = j.at("id").get<int64_t>();
      entry.list.source = j.at("source").get<std::string>();
      entry.list.source_chars = j.at("source_chars").get<int64_t>();
      for (const json& jh : j.at("hypotheses")) {
        Hypothesis h;
        h.text = jh.at("text").get<std::string>();
        h.sum_logprob = jh.at("logprob").get<double>();
        h.char_len = jh.at("chars").get<int64_t>();
        h.score = jh.at("score").get<double>();
        h.forced_eos = jh.value("forced_eos", false);
        if (jh.contains("rescored")) h.rescored = jh.at("rescored").get<double>();
        entry.list.hypotheses.push_back(std::move(h));
      }
      entries.push_back(std::move(entry));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed n-best line: " + e.what());
    }
  }
  return entries;
}

}  // namespace isochron::decode

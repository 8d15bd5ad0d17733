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

#ifndef ISOCHRON_EVAL_REPORT_H_
#define ISOCHRON_EVAL_REPORT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "isochron/data/corpus.h"

namespace isochron::eval {

struct ComplianceStats {
  double compliance_pct = 0.0;     // share of ratios inside [1-tol, 1+tol]
  std::vector<double> ratios;      // per-sentence char length ratios
};

// Length-ratio compliance of (source, hypothesis) pairs: a sentence is
// compliant when char_length(hyp) / char_length(src) lies in
// [1 - tolerance, 1 + tolerance], bounds inclusive. Sources must be
// nonempty (a zero-character source is a data error).
ComplianceStats lr_compliance(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    double tolerance = 0.10);

struct ClassStats {
  int64_t count = 0;      // sentences whose reference pair has this class
  int64_t compliant = 0;  // of those, hypotheses inside the band
  double compliance_pct = 0.0;
};

struct EvalReport {
  int64_t format_version = 1;
  double bleu = 0.0;
  double compliance_pct = 0.0;
  double mean_lr = 0.0;
  double median_lr = 0.0;  // even counts average the middle two
  std::array<ClassStats, data::kNumVerbosityClasses> per_class;
  int64_t sentences = 0;
  double tolerance = 0.10;
  std::string bleu_signature;  // scoring recipe echo
  std::map<std::string, std::string> config;  // variant, search, rescore echo
};

// Scores aligned (hypothesis, reference, source) triples: corpus BLEU
// against the references, LR statistics and compliance against the
// sources, per-class buckets by classify_verbosity(source, reference).
// Lists must be equal-length and nonempty.
EvalReport build_report(const std::vector<std::string>& hypotheses,
                        const std::vector<std::string>& references,
                        const std::vector<std::string>& sources,
                        std::map<std::string, std::string> config,
                        double tolerance = 0.10);

// Versioned JSON serialization; saving and loading round-trips every field
// exactly (doubles use shortest-exact representation).
void save_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

// Plain-text comparison of named systems, one row each, sorted by
// compliance descending, ties by BLEU descending then name.
std::string render_comparison(
    const std::vector<std::pair<std::string, EvalReport>>& systems);

// Per-sentence ratio CSV: header "id,ratio", one data row per sentence.
void save_ratio_csv(const std::vector<double>& ratios,
                    const std::filesystem::path& path);

}  // namespace isochron::eval

#endif  // ISOCHRON_EVAL_REPORT_H_

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

#include "isochron/eval/report.h"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "isochron/common/error.h"
#include "isochron/eval/bleu.h"

namespace isochron::eval {

namespace {

using nlohmann::json;

constexpr const char* kBleuSignature =
    "BLEU-4|tok:13a|case:mixed|smooth:floor1e-9|isochron:1";

bool is_compliant(double ratio, double tolerance) {
  return ratio >= 1.0 - tolerance && ratio <= 1.0 + tolerance;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

json class_to_json(const ClassStats& c) {
  return {{"count", c.count},
          {"compliant", c.compliant},
          {"compliance_pct", c.compliance_pct}};
}

ClassStats class_from_json(const json& j) {
  ClassStats c;
  c.count = j.at("count").get<int64_t>();
  c.compliant = j.at("compliant").get<int64_t>();
  c.compliance_pct = j.at("compliance_pct").get<double>();
  return c;
}

}  // namespace

ComplianceStats lr_compliance(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    double tolerance) {
  ISO_CHECK_ARG(!pairs.empty(), "lr_compliance: no sentence pairs");
  ISO_CHECK_ARG(tolerance >= 0.0, "lr_compliance: negative tolerance");
  ComplianceStats stats;
  stats.ratios.reserve(pairs.size());
  int64_t compliant = 0;
  for (const auto& [source, hypothesis] : pairs) {
    const double ratio = data::length_ratio(source, hypothesis);
    stats.ratios.push_back(ratio);
    if (is_compliant(ratio, tolerance)) ++compliant;
  }
  stats.compliance_pct = 100.0 * static_cast<double>(compliant) /
                         static_cast<double>(pairs.size());
  return stats;
}

EvalReport build_report(const std::vector<std::string>& hypotheses,
                        const std::vector<std::string>& references,
                        const std::vector<std::string>& sources,
                        std::map<std::string, std::string> config,
                        double tolerance) {
  ISO_CHECK_ARG(hypotheses.size() == references.size() &&
                    hypotheses.size() == sources.size(),
                "build_report: misaligned inputs (" << hypotheses.size()
                                                    << " hyps, "
                                                    << references.size()
                                                    << " refs, "
                                                    << sources.size()
                                                    << " sources)");
  ISO_CHECK_ARG(!hypotheses.empty(), "build_report: empty inputs");

  EvalReport report;
  report.tolerance = tolerance;
  report.bleu = bleu(hypotheses, references);
  report.bleu_signature = kBleuSignature;
  report.config = std::move(config);
  report.sentences = static_cast<int64_t>(hypotheses.size());

  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(hypotheses.size());
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    pairs.emplace_back(sources[i], hypotheses[i]);
  }
  ComplianceStats compliance = lr_compliance(pairs, tolerance);
  report.compliance_pct = compliance.compliance_pct;

  double sum = 0.0;
  for (const double r : compliance.ratios) sum += r;
  report.mean_lr = sum / static_cast<double>(compliance.ratios.size());
  report.median_lr = median(compliance.ratios);

  for (size_t i = 0; i < hypotheses.size(); ++i) {
    const data::Verbosity cls =
        data::classify_verbosity(sources[i], references[i]);
    ClassStats& bucket = report.per_class[static_cast<size_t>(cls)];
    ++bucket.count;
    if (is_compliant(compliance.ratios[i], tolerance)) ++bucket.compliant;
  }
  for (ClassStats& bucket : report.per_class) {
    bucket.compliance_pct =
        bucket.count == 0 ? 0.0
                          : 100.0 * static_cast<double>(bucket.compliant) /
                                static_cast<double>(bucket.count);
  }
  return report;
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
  json per_class;
  for (size_t i = 0; i < report.per_class.size(); ++i) {
    const auto name =
        std::string(data::to_string(static_cast<data::Verbosity>(i)));
    per_class[name] = class_to_json(report.per_class[i]);
  }
  const json j = {{"format_version", report.format_version},
                  {"bleu", report.bleu},
                  {"compliance_pct", report.compliance_pct},
                  {"mean_lr", report.mean_lr},
                  {"median_lr", report.median_lr},
                  {"per_class", std::move(per_class)},
                  {"sentences", report.sentences},
                  {"tolerance", report.tolerance},
                  {"bleu_signature", report.bleu_signature},
                  {"config", report.config}};
  std::ofstream out(path, std::ios::binary);
  ISO_CHECK_DATA(out.good(), "cannot open " << path << " for writing");
  out << j.dump(2) << "\n";
  out.flush();
  ISO_CHECK_DATA(out.good(), "failed writing " << path);
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  ISO_CHECK_DATA(in.good(), "cannot open " << path);
  EvalReport report;
  try {
    const json j = json::parse(in);
    report.format_version = j.at("format_version").get<int64_t>();
    ISO_CHECK_DATA(report.format_version == 1,
                   path << ": unsupported report format_version "
                        << report.format_version);
    report.bleu = j.at("bleu").get<double>();
    report.compliance_pct = j.at("compliance_pct").get<double>();
    report.mean_lr = j.at("mean_lr").get<double>();
    report.median_lr = j.at("median_lr").get<double>();
    for (size_t i = 0; i < report.per_class.size(); ++i) {
      const auto name =
          std::string(data::to_string(static_cast<data::Verbosity>(i)));
      report.per_class[i] = class_from_json(j.at("per_class").at(name));
    }
    report.sentences = j.at("sentences").get<int64_t>();
    report.tolerance = j.at("tolerance").get<double>();
    report.bleu_signature = j.at("bleu_signature").get<std::string>();
    report.config =
        j.at("config").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed report: " + e.what());
  }
  return report;
}

std::string render_comparison(
    const std::vector<std::pair<std::string, EvalReport>>& systems) {
  ISO_CHECK_ARG(!systems.empty(), "render_comparison: no systems");
  std::vector<std::pair<std::string, EvalReport>> rows = systems;
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.compliance_pct != b.second.compliance_pct) {
      return a.second.compliance_pct > b.second.compliance_pct;
    }
    if (a.second.bleu != b.second.bleu) return a.second.bleu > b.second.bleu;
    return a.first < b.first;
  });

  size_t name_width = 6;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());

  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-*s  %8s  %12s  %8s  %10s  %9s\n",
                static_cast<int>(name_width), "system", "BLEU",
                "compliance%", "mean LR", "median LR", "sentences");
  out += buf;
  for (const auto& [name, report] : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%-*s  %8.2f  %12.2f  %8.3f  %10.3f  %9lld\n",
                  static_cast<int>(name_width), name.c_str(), report.bleu,
                  report.compliance_pct, report.mean_lr, report.median_lr,
                  static_cast<long long>(report.sentences));
    out += buf;
  }
  return out;
}

void save_ratio_csv(const std::vector<double>& ratios,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  ISO_CHECK_DATA(out.good(), "cannot open " << path << " for writing");
  out << "id,ratio\n";
  char buf[64];
  for (size_t i = 0; i < ratios.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, ratios[i]);
    out << buf;
  }
  out.flush();
  ISO_CHECK_DATA(out.good(), "failed writing " << path);
}

}  // namespace isochron::eval

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

#include "isochron/data/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "isochron/common/error.h"
#include "isochron/data/unicode.h"

namespace isochron::data {
namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool blank_after_trim(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

void check_field(std::string_view text, const char* what, int64_t line_no) {
  ISO_CHECK_DATA(!blank_after_trim(text),
                 "corpus line " << line_no << ": empty " << what);
  ISO_CHECK_DATA(text.find('\r') == std::string_view::npos,
                 "corpus line " << line_no << ": CR line ending (file must use LF)");
  try {
    utf8_decode(text);
  } catch (const DataError& e) {
    ISO_CHECK_DATA(false, "corpus line " << line_no << ": " << e.what());
  }
}

}  // namespace

std::string_view to_string(Verbosity v) {
  switch (v) {
    case Verbosity::Short:
      return "Short";
    case Verbosity::Normal:
      return "Normal";
    case Verbosity::Long:
      return "Long";
  }
  throw UsageError("invalid Verbosity value");
}

Verbosity parse_verbosity(std::string_view text) {
  const std::string low = lowercase(text);
  if (low == "short") return Verbosity::Short;
  if (low == "normal") return Verbosity::Normal;
  if (low == "long") return Verbosity::Long;
  throw DataError("unknown verbosity class \"" + std::string(text) +
                  "\" (want Short|Normal|Long)");
}

double length_ratio(std::string_view source, std::string_view target) {
  const int64_t src_len = char_length(source);
  ISO_CHECK_DATA(src_len > 0, "length ratio undefined: source has no characters");
  return static_cast<double>(char_length(target)) / static_cast<double>(src_len);
}

Verbosity classify_verbosity(std::string_view source, std::string_view target) {
  const double lr = length_ratio(source, target);
  if (lr < 0.97) return Verbosity::Short;
  if (lr <= 1.05) return Verbosity::Normal;
  return Verbosity::Long;
}

void classify_corpus(std::vector<ParallelExample>& examples) {
  for (auto& ex : examples) {
    ex.verbosity = classify_verbosity(ex.source, ex.target);
  }
}

std::vector<ParallelExample> load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ISO_CHECK_DATA(in.is_open(), "cannot open corpus file: " << path);
  std::ostringstream buf;
  buf << in.rdbuf();
  ISO_CHECK_DATA(in.good() || in.eof(), "read failure on corpus file: " << path);
  const std::string content = buf.str();

  std::vector<ParallelExample> examples;
  int64_t line_no = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    const bool had_newline = nl != std::string::npos;
    if (!had_newline) nl = content.size();
    const std::string_view line(content.data() + pos, nl - pos);
    pos = nl + (had_newline ? 1 : 0);
    ++line_no;

    const auto fields = split_tabs(line);
    ISO_CHECK_DATA(fields.size() == 2 || fields.size() == 3,
                   "corpus line " << line_no << ": expected 2 or 3 tab-separated "
                                  << "columns, got " << fields.size());
    check_field(fields[0], "source", line_no);
    check_field(fields[1], "target", line_no);

    ParallelExample ex;
    ex.id = static_cast<int64_t>(examples.size());
    ex.source = std::string(fields[0]);
    ex.target = std::string(fields[1]);
    if (fields.size() == 3) {
      check_field(fields[2], "class", line_no);
      try {
        ex.verbosity = parse_verbosity(fields[2]);
      } catch (const DataError& e) {
        ISO_CHECK_DATA(false, "corpus line " << line_no << ": " << e.what());
      }
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

void save_corpus(const std::vector<ParallelExample>& examples,
                 const std::string& path) {
  std::string out;
  int64_t index = 0;
  for (const auto& ex : examples) {
    ++index;
    for (const std::string* text : {&ex.source, &ex.target}) {
      ISO_CHECK_DATA(!blank_after_trim(*text),
                     "corpus example " << index << ": empty field");
      ISO_CHECK_DATA(text->find('\t') == std::string::npos &&
                         text->find('\n') == std::string::npos &&
                         text->find('\r') == std::string::npos,
                     "corpus example " << index
                                       << ": tab or newline inside sentence text");
      utf8_decode(*text);
    }
    out += ex.source;
    out += '\t';
    out += ex.target;
    if (ex.verbosity.has_value()) {
      out += '\t';
      out += to_string(*ex.verbosity);
    }
    out += '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  ISO_CHECK_DATA(file.is_open(), "cannot open corpus file for write: " << path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  ISO_CHECK_DATA(file.good(), "write failure on corpus file: " << path);
}

}  // namespace isochron::data

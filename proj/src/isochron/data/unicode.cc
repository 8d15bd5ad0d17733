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

#include "isochron/data/unicode.h"

#include <algorithm>

#include "isochron/common/error.h"

namespace isochron::data {

namespace {

struct DecompEntry {
  uint32_t cp;
  uint32_t offset;
  uint32_t len;
};
struct CccEntry {
  uint32_t cp;
  uint8_t ccc;
};
struct CompEntry {
  uint32_t first;
  uint32_t second;
  uint32_t composite;
};

#include "isochron/data/unicode_tables.inc"

constexpr char32_t kSBase = 0xAC00;
constexpr char32_t kLBase = 0x1100;
constexpr char32_t kVBase = 0x1161;
constexpr char32_t kTBase = 0x11A7;
constexpr int kLCount = 19;
constexpr int kVCount = 21;
constexpr int kTCount = 28;
constexpr int kNCount = kVCount * kTCount;
constexpr int kSCount = kLCount * kNCount;

bool is_hangul_syllable(char32_t cp) {
  return cp >= kSBase && cp < kSBase + static_cast<char32_t>(kSCount);
}

const DecompEntry* find_decomp(char32_t cp) {
  auto it = std::lower_bound(
      std::begin(kDecomp), std::end(kDecomp), static_cast<uint32_t>(cp),
      [](const DecompEntry& e, uint32_t v) { return e.cp < v; });
  if (it != std::end(kDecomp) && it->cp == static_cast<uint32_t>(cp))
    return &*it;
  return nullptr;
}

// 0 when no primary composite exists for the pair.
char32_t compose_pair(char32_t a, char32_t b) {
  // Hangul: L+V and LV+T are algorithmic.
  if (a >= kLBase && a < kLBase + static_cast<char32_t>(kLCount) &&
      b >= kVBase && b < kVBase + static_cast<char32_t>(kVCount)) {
    int l = static_cast<int>(a - kLBase);
    int v = static_cast<int>(b - kVBase);
    return kSBase + static_cast<char32_t>((l * kVCount + v) * kTCount);
  }
  if (is_hangul_syllable(a) && (a - kSBase) % kTCount == 0 && b > kTBase &&
      b < kTBase + static_cast<char32_t>(kTCount)) {
    return a + (b - kTBase);
  }
  auto it = std::lower_bound(
      std::begin(kComp), std::end(kComp),
      std::pair<uint32_t, uint32_t>{static_cast<uint32_t>(a),
                                    static_cast<uint32_t>(b)},
      [](const CompEntry& e, const std::pair<uint32_t, uint32_t>& v) {
        return e.first != v.first ? e.first < v.first : e.second < v.second;
      });
  if (it != std::end(kComp) && it->first == static_cast<uint32_t>(a) &&
      it->second == static_cast<uint32_t>(b))
    return static_cast<char32_t>(it->composite);
  return 0;
}

}  // namespace

uint8_t canonical_combining_class(char32_t cp) {
  auto it = std::lower_bound(
      std::begin(kCcc), std::end(kCcc), static_cast<uint32_t>(cp),
      [](const CccEntry& e, uint32_t v) { return e.cp < v; });
  if (it != std::end(kCcc) && it->cp == static_cast<uint32_t>(cp))
    return it->ccc;
  return 0;
}

std::vector<char32_t> utf8_decode(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    size_t need;
    char32_t cp;
    if (b0 < 0x80) {
      need = 0;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      need = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      need = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      need = 3;
      cp = b0 & 0x07;
    } else {
      ISO_CHECK_DATA(false, "invalid UTF-8 lead byte at offset " << i);
      return out;
    }
    ISO_CHECK_DATA(i + need < s.size(),
                   "truncated UTF-8 sequence at offset " << i);
    for (size_t j = 1; j <= need; ++j) {
      unsigned char bj = static_cast<unsigned char>(s[i + j]);
      ISO_CHECK_DATA((bj & 0xC0) == 0x80,
                     "invalid UTF-8 continuation byte at offset " << i + j);
      cp = (cp << 6) | (bj & 0x3F);
    }
    static const char32_t kMinForLen[4] = {0, 0x80, 0x800, 0x10000};
    ISO_CHECK_DATA(cp >= kMinForLen[need],
                   "overlong UTF-8 encoding at offset " << i);
    ISO_CHECK_DATA(cp < 0xD800 || cp > 0xDFFF,
                   "UTF-8 encoded surrogate at offset " << i);
    ISO_CHECK_DATA(cp <= 0x10FFFF, "code point out of range at offset " << i);
    out.push_back(cp);
    i += need + 1;
  }
  return out;
}

std::string utf8_encode_one(char32_t cp) {
  ISO_CHECK_ARG(cp <= 0x10FFFF && (cp < 0xD800 || cp > 0xDFFF),
                "cannot encode invalid scalar " << static_cast<uint32_t>(cp));
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::string utf8_encode(std::span<const char32_t> cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) out += utf8_encode_one(cp);
  return out;
}

std::vector<char32_t> nfc(std::span<const char32_t> cps) {
  // 1. Full canonical decomposition.
  std::vector<char32_t> seq;
  seq.reserve(cps.size() + 8);
  for (char32_t cp : cps) {
    if (is_hangul_syllable(cp)) {
      int s = static_cast<int>(cp - kSBase);
      seq.push_back(kLBase + static_cast<char32_t>(s / kNCount));
      seq.push_back(kVBase + static_cast<char32_t>((s % kNCount) / kTCount));
      int t = s % kTCount;
      if (t != 0) seq.push_back(kTBase + static_cast<char32_t>(t));
      continue;
    }
    if (const DecompEntry* e = find_decomp(cp)) {
      for (uint32_t j = 0; j < e->len; ++j)
        seq.push_back(static_cast<char32_t>(kDecompData[e->offset + j]));
      continue;
    }
    seq.push_back(cp);
  }

  // 2. Canonical ordering: stable sort of nonzero-ccc runs by ccc.
  for (size_t i = 1; i < seq.size(); ++i) {
    uint8_t cc = canonical_combining_class(seq[i]);
    if (cc == 0) continue;
    size_t j = i;
    while (j > 0 && canonical_combining_class(seq[j - 1]) > cc) {
      std::swap(seq[j - 1], seq[j]);
      --j;
    }
  }

  // 3. Canonical recomposition.
  std::vector<char32_t> out;
  out.reserve(seq.size());
  ptrdiff_t last_starter = -1;
  uint8_t prev_cc = 0;
  for (char32_t c : seq) {
    uint8_t cc = canonical_combining_class(c);
    if (last_starter >= 0) {
      bool immediately_after_starter =
          out.size() == static_cast<size_t>(last_starter) + 1;
      bool blocked = !immediately_after_starter && prev_cc >= cc;
      if (!blocked) {
        if (char32_t comp =
                compose_pair(out[static_cast<size_t>(last_starter)], c)) {
          out[static_cast<size_t>(last_starter)] = comp;
          continue;
        }
      }
    }
    if (cc == 0) last_starter = static_cast<ptrdiff_t>(out.size());
    prev_cc = cc;
    out.push_back(c);
  }
  return out;
}

std::string nfc_utf8(std::string_view s) {
  return utf8_encode(nfc(utf8_decode(s)));
}

int64_t char_length(std::string_view s) {
  return static_cast<int64_t>(nfc(utf8_decode(s)).size());
}

}  // namespace isochron::data

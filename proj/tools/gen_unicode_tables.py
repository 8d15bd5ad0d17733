#!/usr/bin/env python3
# Copyright 2026 The Isochron Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Generates the canonical normalization tables used by data/unicode.cc.

Emits three tables derived from the Python unicodedata database:
  * full canonical (NFD) decompositions, Hangul excluded (algorithmic);
  * nonzero canonical combining classes;
  * primary composition pairs (composition exclusions drop out naturally
    because each candidate pair is verified through NFC round-trip).

Also writes a golden case file exercising decomposition, reordering,
composition, Hangul and idempotence, for the C++ unit tests.

Usage: gen_unicode_tables.py OUT_INC OUT_CASES
"""

import random
import sys
import unicodedata

HANGUL_S_BASE = 0xAC00
HANGUL_S_COUNT = 11172
MAX_CP = 0x110000


def is_hangul_syllable(cp):
    return HANGUL_S_BASE <= cp < HANGUL_S_BASE + HANGUL_S_COUNT


def build_tables():
    decomp = {}
    ccc = {}
    comp = {}
    for cp in range(MAX_CP):
        if 0xD800 <= cp <= 0xDFFF:
            continue
        ch = chr(cp)
        cls = unicodedata.combining(ch)
        if cls:
            ccc[cp] = cls
        if is_hangul_syllable(cp):
            continue
        nfd = unicodedata.normalize("NFD", ch)
        if nfd != ch:
            decomp[cp] = [ord(c) for c in nfd]
        raw = unicodedata.decomposition(ch)
        if raw and not raw.startswith("<"):
            parts = [int(p, 16) for p in raw.split()]
            if len(parts) == 2:
                a, b = parts
                if unicodedata.normalize("NFC", chr(a) + chr(b)) == ch:
                    comp[(a, b)] = cp
    return decomp, ccc, comp


def golden_cases():
    cases = []

    def add(text):
        cases.append((text, unicodedata.normalize("NFC", text)))

    # Classic composition and reordering cases.
    add("café")                      # cafe + combining acute
    add("café")                            # already composed
    add("ẹ́")                        # dot below + acute: reorder
    add("ẹ́")                        # acute + dot below
    add("q̣̇")                        # non-composing marks reorder
    add("Å")                         # A + ring = Angstrom letter
    add("Ω")                               # Ohm sign -> Greek Omega
    add("ḍ̇")                         # d-dot-above + dot-below
    add("ḍ̇")                   # d + dot-below + dot-above
    add("각")                   # Hangul L+V+T jamo
    add("가")                         # Hangul L+V
    add("각")                         # LV syllable + T
    add("Å")                               # Angstrom sign
    add("Å")                               # composed A-ring stays
    add("Ά")                         # Greek capital alpha + acute
    add("אָ")                         # Hebrew (no composition)
    add("ཱི")                         # Tibetan vowel signs (ccc 129/130)
    add("à֮")                   # ccc 228 then 230: keep order
    add("à֮")                   # ccc 230 then 228: reorder
    add("ascii only, nothing to do")
    add("")

    rng = random.Random(20260814)
    marks = [0x0300, 0x0301, 0x0308, 0x0323, 0x031B, 0x05AE, 0x0F72]
    bases = list("aeiouAEOUnycs") + ["ᄀ", "ᅡ", "가", "α"]
    for _ in range(150):
        parts = []
        for _ in range(rng.randint(1, 6)):
            parts.append(rng.choice(bases))
            for _ in range(rng.randint(0, 3)):
                parts.append(chr(rng.choice(marks)))
        add("".join(parts))
    return cases


def main():
    out_inc, out_cases = sys.argv[1], sys.argv[2]
    decomp, ccc, comp = build_tables()

    lines = []
    lines.append("// Generated by tools/gen_unicode_tables.py from the")
    lines.append(
        f"// unicodedata database, version {unicodedata.unidata_version}."
    )
    lines.append("// Do not edit by hand.")
    lines.append("")
    lines.append("// clang-format off")

    data = []
    entries = []
    for cp in sorted(decomp):
        seq = decomp[cp]
        entries.append((cp, len(data), len(seq)))
        data.extend(seq)
    lines.append(f"static const DecompEntry kDecomp[{len(entries)}] = {{")
    for cp, off, ln in entries:
        lines.append(f"  {{0x{cp:X}, {off}, {ln}}},")
    lines.append("};")
    lines.append(f"static const uint32_t kDecompData[{len(data)}] = {{")
    for i in range(0, len(data), 12):
        lines.append("  " + ", ".join(f"0x{v:X}" for v in data[i : i + 12]) + ",")
    lines.append("};")

    lines.append(f"static const CccEntry kCcc[{len(ccc)}] = {{")
    for cp in sorted(ccc):
        lines.append(f"  {{0x{cp:X}, {ccc[cp]}}},")
    lines.append("};")

    lines.append(f"static const CompEntry kComp[{len(comp)}] = {{")
    for (a, b) in sorted(comp):
        lines.append(f"  {{0x{a:X}, 0x{b:X}, 0x{comp[(a, b)]:X}}},")
    lines.append("};")
    lines.append("// clang-format on")

    with open(out_inc, "w") as f:
        f.write("\n".join(lines) + "\n")

    with open(out_cases, "w") as f:
        f.write("# input codepoints (hex, space separated) <TAB> nfc codepoints\n")
        for text, expected in golden_cases():
            left = " ".join(f"{ord(c):X}" for c in text)
            right = " ".join(f"{ord(c):X}" for c in expected)
            f.write(f"{left}\t{right}\n")

    print(
        f"decomp entries: {len(entries)}, data: {len(data)}, "
        f"ccc: {len(ccc)}, comp pairs: {len(comp)}"
    )


if __name__ == "__main__":
    main()

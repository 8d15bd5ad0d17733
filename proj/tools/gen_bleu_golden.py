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
"""Golden corpus generator for the BLEU conformance suite.

Reference corpus BLEU-4 written directly from the public mteval-v13a /
SacreBLEU definition: 13a tokenization (entity unescape plus the three
punctuation-splitting regex passes), clipped modified n-gram precisions,
geometric mean over n=1..4, and the brevity penalty exp(1 - ref/hyp) for
short hypotheses. Zero precisions take the documented floor of 1e-9 inside
the log (SacreBLEU's default smoothing differs there, so generated corpora
keep every precision positive except the cases named *zero*, which exist to
lock the floor itself).

Run from the repository root:  python3 tools/gen_bleu_golden.py
Regenerating must be a no-op; the outputs under tests/golden/bleu are
frozen inputs to the unit and acceptance suites.
"""

import json
import math
import pathlib
import random
import re
from collections import Counter

_13A_RULES = [
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 - "),
]


def tokenize_13a(line: str) -> list[str]:
    line = line.replace("<skipped>", "").replace("-\n", "").replace("\n", " ")
    if "&" in line:
        line = (line.replace("&quot;", '"').replace("&amp;", "&")
                .replace("&lt;", "<").replace("&gt;", ">"))
    line = f" {line} "
    for pattern, repl in _13A_RULES:
        line = pattern.sub(repl, line)
    return line.split()


def corpus_bleu(hyps: list[str], refs: list[str]) -> float:
    assert len(hyps) == len(refs) and hyps
    matches = [0] * 4
    totals = [0] * 4
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_tok = tokenize_13a(hyp)
        ref_tok = tokenize_13a(ref)
        hyp_len += len(hyp_tok)
        ref_len += len(ref_tok)
        for n in range(1, 5):
            hyp_ngrams = Counter(
                tuple(hyp_tok[i:i + n]) for i in range(len(hyp_tok) - n + 1))
            ref_ngrams = Counter(
                tuple(ref_tok[i:i + n]) for i in range(len(ref_tok) - n + 1))
            totals[n - 1] += sum(hyp_ngrams.values())
            matches[n - 1] += sum(
                min(count, ref_ngrams[gram])
                for gram, count in hyp_ngrams.items())
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(4):
        precision = matches[n] / totals[n] if totals[n] > 0 else 0.0
        log_sum += math.log(precision if precision > 0.0 else 1e-9)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_sum / 4.0) * 100.0


_WORDS = ("the cat sat on the mat while a small dog watched the quiet "
          "garden and two birds sang over the old stone wall near the "
          "river bank where children played every warm summer evening "
          "until the lights came on").split()


def _sentence(rng: random.Random, length: int) -> list[str]:
    return [rng.choice(_WORDS) for _ in range(length)]


def _perturb(rng: random.Random, words: list[str], edits: int) -> list[str]:
    out = list(words)
    for _ in range(edits):
        kind = rng.randrange(3)
        if kind == 0 and out:  # substitute
            out[rng.randrange(len(out))] = rng.choice(_WORDS)
        elif kind == 1 and len(out) > 8:  # delete
            del out[rng.randrange(len(out))]
        else:  # insert
            out.insert(rng.randrange(len(out) + 1), rng.choice(_WORDS))
    return out


def _random_case(name: str, seed: int, sentences: int, edits: int) -> dict:
    rng = random.Random(seed)
    refs = []
    hyps = []
    for _ in range(sentences):
        ref = _sentence(rng, rng.randrange(12, 24))
        hyp = _perturb(rng, ref, edits)
        refs.append(" ".join(ref))
        hyps.append(" ".join(hyp))
    return {"name": name, "hyps": hyps, "refs": refs}


def build_cases() -> list[dict]:
    cases = []
    for i, edits in enumerate([0, 1, 2, 3, 4, 5, 6, 8, 10, 12]):
        cases.append(_random_case(f"random_edits_{edits}", 1000 + i, 24, edits))
    cases.append({
        "name": "identity_short",
        "hyps": ["the cat sat on the mat near the wall"],
        "refs": ["the cat sat on the mat near the wall"],
    })
    cases.append({
        "name": "clipped_unigrams",
        "hyps": ["the the the the the the the",
                 "the cat sat on the mat while a dog watched"],
        "refs": ["the cat is on the mat",
                 "the cat sat on the mat while a dog watched"],
    })
    cases.append({
        "name": "brevity_penalty",
        "hyps": ["the cat sat on the mat",
                 "children played every warm summer evening"],
        "refs": ["the cat sat on the mat while a small dog watched the garden",
                 "children played every warm summer evening until the lights"],
    })
    cases.append({
        "name": "punctuation_splits",
        "hyps": ["the cat, which sat on the mat... watched: birds, dogs; "
                 "and (sometimes) fish!",
                 "prices rose 3.5 percent, then fell 1,000 points - twice 5-4."],
        "refs": ["the cat, which sat on the mat... watched: birds, cats; "
                 "and (sometimes) fish!",
                 "prices rose 3.5 percent, then fell 1,000 points - twice 5-4."],
    })
    cases.append({
        "name": "entity_unescape",
        "hyps": ["she said &quot;hello&quot; &amp; waved <skipped>goodbye",
                 "a &lt;tag&gt; is not a word"],
        "refs": ["she said \"hello\" & waved goodbye",
                 "a <tag> is not a word"],
    })
    cases.append({
        "name": "accented_text",
        "hyps": ["le café était très bon et l'été fût agréable",
                 "die straße nach köln war über nacht gesperrt"],
        "refs": ["le café était très bon et l'hiver fût agréable",
                 "die straße nach köln war über nacht gesperrt"],
    })
    cases.append({
        "name": "long_vs_short_mix",
        "hyps": ["the quiet garden and two birds sang over the old stone "
                 "wall near the river bank where children played",
                 "a small dog watched",
                 "the lights came on until the warm summer evening ended "
                 "and every child went home across the old stone bridge"],
        "refs": ["the quiet garden and two birds sang over the old stone "
                 "wall near the river bank where children played",
                 "a small dog watched the quiet garden for hours",
                 "the lights came on until the warm summer evening ended"],
    })
    cases.append(_random_case("random_long_docs", 2024, 60, 3))
    cases.append({
        "name": "zero_fourgram_floor",
        "hyps": ["cat the sat mat on the"],
        "refs": ["the cat sat on the mat"],
    })
    cases.append({
        "name": "zero_bigram_floor",
        "hyps": ["mat garden wall river"],
        "refs": ["the mat near the garden wall by the river"],
    })
    assert len(cases) == 20
    return cases


def main() -> None:
    out_dir = pathlib.Path(__file__).resolve().parent.parent / "tests" / "golden" / "bleu"
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for index, case in enumerate(build_cases()):
        case["bleu"] = corpus_bleu(case["hyps"], case["refs"])
        path = out_dir / f"case_{index:02d}.json"
        path.write_text(json.dumps(case, ensure_ascii=False, indent=1) + "\n",
                        encoding="utf-8")
        manifest.append({"file": path.name, "name": case["name"],
                         "bleu": case["bleu"]})
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=1) + "\n",
        encoding="utf-8")
    for entry in manifest:
        print(f"{entry['file']}  {entry['bleu']:10.6f}  {entry['name']}")


if __name__ == "__main__":
    main()

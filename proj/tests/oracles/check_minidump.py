#!/usr/bin/env python3
# Copyright 2026 The Calibre Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Reference passage filter for the mini-dump, written without the C++ code.

Prints the qualifying passages (id, token count, anchor token spans) and
per-language stats as JSON. The output is frozen as
tests/data/corpus/minidump_expected.json.
"""

import json
import re
import string
import sys

PUNCT = re.escape(string.punctuation)
TOKEN = re.compile(r"\[(?:PAD|CLS|SEP|MASK|UNK)\]|[%s]|[^\s%s]+" % (PUNCT, PUNCT))
LINK = re.compile(r"\[\[([^\[\]\n]*)\]\]")


def strip_markup(text):
    """Returns plain text and a list of (begin, end) char ranges of anchors."""
    out = []
    anchors = []
    pos = 0
    for line in text.split("\n"):
        if re.fullmatch(r"=.*=\s*", line):
            continue
        plain = ""
        i = 0
        while i < len(line):
            m = LINK.match(line, i)
            if m:
                display = m.group(1).split("|")[-1]
                if display.strip():
                    lead = len(display) - len(display.lstrip(" \t"))
                    trail = len(display) - len(display.rstrip(" \t"))
                    b = pos + len(plain)
                    plain += display
                    anchors.append((b + lead, pos + len(plain) - trail))
                    i = m.end()
                    continue
            if line.startswith("''", i):
                while i < len(line) and line[i] == "'":
                    i += 1
                continue
            plain += line[i]
            i += 1
        out.append(plain)
        pos += len(plain) + 1
    return "\n".join(out), anchors


def main(path):
    expected = []
    stats = {}
    for raw in open(path, encoding="utf-8"):
        page = json.loads(raw)
        plain, anchors = strip_markup(page["wikitext"])
        # Paragraphs: maximal runs of non-blank lines.
        k = 0
        for m in re.finditer(r"(?:^[^\n]*\S[^\n]*(?:\n|$))+", plain, re.M):
            b, e = m.start(), m.end()
            para = plain[b:e].rstrip("\n")
            toks = [(t.start() + b, t.end() + b) for t in TOKEN.finditer(para)]
            spans = []
            for ab, ae in anchors:
                if ab < b or ae > b + len(para):
                    continue
                starts = [i for i, t in enumerate(toks) if t[0] == ab]
                ends = [i for i, t in enumerate(toks) if t[1] == ae]
                if not starts or not ends:
                    continue
                s, t = starts[0], ends[0] + 1
                if t - s <= 8:
                    spans.append([s, t])
            spans.sort(key=lambda x: x[0])
            kept = []
            for sp in spans:
                if kept and sp[0] < kept[-1][1]:
                    continue
                kept.append(sp)
            if 50 <= len(toks) <= 250 and len(kept) >= 2:
                expected.append({"id": "%s#%d" % (page["page_id"], k),
                                 "language": page["language"],
                                 "tokens": len(toks), "anchors": kept})
                st = stats.setdefault(page["language"], [0, 0, 0])
                st[0] += 1
                st[1] += len(kept)
                st[2] += sum(t - s for s, t in kept)
            k += 1
    expected.sort(key=lambda x: (x["id"].split("#")[0], int(x["id"].split("#")[1])))
    out = {
        "passages": expected,
        "stats": {lang: {"passages": v[0], "answers": v[1],
                         "avg_answer_tokens": v[2] / v[1],
                         "avg_answers_per_passage": v[1] / v[0]}
                  for lang, v in sorted(stats.items())},
    }
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])

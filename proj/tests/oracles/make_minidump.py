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
"""Writes the 30-page wiki mini-dump used by the corpus tests.

Each paragraph is built from a recipe (token count, anchor lengths, extras)
so that which paragraphs survive filtering is known by construction; the
independent checker in check_minidump.py recomputes it from the text.
"""

import json
import random
import sys

WORDS = """river town castle bridge market valley church school harbor forest
station garden museum island mountain village tower square palace road
north south east west old new great little upper lower
was is had built opened founded known named moved became
in on at of by near with from after before during under over
and or but also then later often still once""".split()
NAMES = """Bonn Rhine Cologne Berlin Madrid Sevilla Munich Vienna Hamburg Paris
Lyon Porto Lisbon Bern Basel Graz Linz Kiel Ulm Trier Aachen Mainz Toledo
Bilbao Granada Valencia Malaga Cadiz Leon Burgos""".split()

# (kind, tokens, anchor lengths). Kinds other than "ok" must be dropped.
RECIPES = {
    "ok": None,
    "short": (40, [1, 2, 1]),
    "border_short": (49, [1, 1]),
    "border_low": (50, [1, 2]),
    "border_high": (250, [2, 3, 1]),
    "border_long": (251, [1, 1]),
    "long": (300, [2, 2]),
    "one_anchor": (100, [2]),
    "long_anchor": (100, [1, 9]),
    "long_anchor_kept": (120, [1, 10, 3]),
    "no_anchor": (80, []),
}


def render(rng, n_tokens, anchor_lens, malformed=False, bold=False, piped=True):
    """Paragraph text with anchors spread through n_tokens tokens."""
    n_anchor_tokens = sum(anchor_lens)
    body = n_tokens - n_anchor_tokens
    assert body > 2 * len(anchor_lens) + 2
    # Anchor slots: positions in the body word stream before which an anchor
    # goes, at least two words apart.
    slots = sorted(rng.sample(range(1, body // 2), len(anchor_lens)))
    slots = [s * 2 for s in slots]
    pieces = []
    words_out = 0
    anchors = list(anchor_lens)
    k = 0
    i = 0
    while words_out < body:
        if k < len(anchors) and i == slots[k]:
            disp = " ".join(rng.choice(NAMES) for _ in range(anchors[k]))
            if piped and rng.random() < 0.5:
                pieces.append("[[Q%d|%s]]" % (rng.randrange(1000, 9999), disp))
            else:
                pieces.append("[[%s]]" % disp)
            k += 1
        # Every ninth word closes a sentence with a separate "." token.
        if words_out > 0 and words_out % 9 == 8 and words_out + 1 < body:
            pieces[-1] += "."
            words_out += 1
            i += 1
            continue
        w = rng.choice(WORDS)
        if bold and words_out == 3:
            w = "'''%s'''" % w
        pieces.append(w)
        words_out += 1
        i += 1
    while k < len(anchors):
        pieces.append("[[%s]]" % " ".join(rng.choice(NAMES) for _ in range(anchors[k])))
        k += 1
    if malformed:
        pos = len(pieces) // 2
        pieces.insert(pos, "[[broken")
    return " ".join(pieces)


def ok_recipe(rng):
    n = rng.randrange(60, 220)
    lens = [rng.randrange(1, 5) for _ in range(rng.randrange(2, 6))]
    return n, lens


# Page layout: list of paragraph kinds per page. "ok*" marks a qualifying
# paragraph that also carries a malformed link.
LAYOUT = [
    ["ok", "short"],
    ["long"],
    ["one_anchor", "no_anchor"],
    ["ok*"],
    ["short", "short"],
    ["border_low"],
    ["border_short"],
    ["border_high"],
    ["border_long"],
    ["long_anchor"],
    ["long_anchor_kept"],
    ["no_anchor"],
    ["ok", "one_anchor"],
    ["short"],
    ["long", "no_anchor"],
    ["one_anchor"],
    ["ok"],
    ["short", "long"],
    ["no_anchor", "short"],
    ["one_anchor*"],
    ["ok", "ok"],
    ["long_anchor", "one_anchor"],
    ["short"],
    ["ok"],
    ["long"],
    ["ok"],
    ["one_anchor", "short"],
    ["border_short", "border_long"],
    ["no_anchor"],
    ["short"],
]


def main(path):
    rng = random.Random(20260418)
    langs = ["en", "es", "de"]
    lines = []
    for p, kinds in enumerate(LAYOUT):
        paras = []
        if p % 4 == 0:
            paras.append("== Section %d ==" % p)
        for kind in kinds:
            malformed = kind.endswith("*")
            kind = kind.rstrip("*")
            if kind == "ok":
                n, lens = ok_recipe(rng)
            else:
                n, lens = RECIPES[kind]
            paras.append(render(rng, n, lens, malformed=malformed, bold=(p % 3 == 1)))
        page = {
            "page_id": "p%02d" % (p + 1),
            "language": langs[p % 3],
            "wikitext": "\n\n".join(paras) + "\n",
        }
        lines.append(json.dumps(page, ensure_ascii=False))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])

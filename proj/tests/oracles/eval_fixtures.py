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
"""Reference values for the pairing and eval fixtures.

Spans are [start, end, type] with half-open token bounds. Writes
tests/data/eval/fixtures.json, which the C++ tests read back and compare
against their own computations.
"""

import json
import sys
from fractions import Fraction

# Ten sentences for the window-consistency check. Gold entities that no
# prediction reaches drop recall; gaps are counted in tokens between spans.
CONSISTENCY = [
    # identical counts: rule 1 pairs everything
    {"len": 12, "gold": [[0, 2, "PER"], [5, 6, "LOC"]], "pred": [[0, 2, "PER"], [7, 9, "ORG"]]},
    # extra prediction overlapping a gold
    {"len": 15, "gold": [[3, 5, "ORG"]], "pred": [[2, 5, "ORG"], [8, 9, "LOC"]]},
    # missing prediction, one gold never reached
    {"len": 14, "gold": [[1, 2, "PER"], [9, 11, "LOC"]], "pred": [[1, 3, "PER"]]},
    # prediction adjacent to the only unreached gold
    {"len": 10, "gold": [[0, 1, "LOC"], [4, 6, "ORG"], [8, 9, "PER"]],
     "pred": [[0, 1, "LOC"], [2, 4, "ORG"]]},
    # no predictions: whole-sentence pairs reach every gold
    {"len": 8, "gold": [[2, 4, "MISC"]], "pred": []},
    # far prediction reaches its gold only with the entire context
    {"len": 20, "gold": [[0, 2, "PER"], [15, 17, "LOC"]], "pred": [[0, 2, "PER"], [6, 7, "ORG"], [9, 10, "ORG"]]},
    # no gold entities, spurious prediction
    {"len": 9, "gold": [], "pred": [[3, 4, "PER"]]},
    # two predictions share one gold, a second gold is far away
    {"len": 18, "gold": [[2, 6, "ORG"], [14, 15, "LOC"]], "pred": [[2, 4, "ORG"], [4, 6, "ORG"], [10, 11, "PER"]]},
    # exact match, nothing else
    {"len": 6, "gold": [[1, 3, "LOC"]], "pred": [[1, 3, "LOC"]]},
    # adjacent predictions on both sides of an unmatched gold
    {"len": 16, "gold": [[5, 7, "PER"], [12, 13, "LOC"]], "pred": [[3, 5, "PER"], [7, 8, "PER"], [0, 1, "ORG"]]},
]

# Twenty aligned prediction/gold comparisons, one per question.
REPORT = [
    [[3, 7], [4, 6]], [[4, 6], [4, 6]], [[4, 5], [4, 6]], [[2, 5], [4, 8]], [[0, 2], [5, 7]],
    [[10, 14], [10, 12]], [[10, 12], [10, 14]], [[11, 15], [10, 14]], [[1, 2], [1, 2]],
    [[0, 9], [3, 4]], [[3, 4], [0, 9]], [[6, 8], [8, 9]], [[7, 9], [8, 9]], [[8, 9], [8, 9]],
    [[2, 3], [3, 5]], [[5, 9], [5, 6]], [[5, 6], [5, 9]], [[20, 25], [22, 27]], [[0, 1], [0, 1]],
    [[4, 8], [6, 10]],
]

# Five sentences for the oracle upper bounds.
ORACLE = [
    {"len": 12, "gold": [[0, 2, "PER"], [5, 6, "LOC"]], "pred": [[0, 2, "PER"], [5, 7, "LOC"]]},
    {"len": 10, "gold": [[1, 3, "ORG"]], "pred": [[1, 3, "LOC"]]},
    {"len": 15, "gold": [[2, 4, "PER"], [8, 11, "ORG"]], "pred": [[2, 5, "ORG"], [9, 11, "ORG"], [13, 14, "LOC"]]},
    {"len": 9, "gold": [[4, 6, "MISC"]], "pred": []},
    {"len": 11, "gold": [[0, 1, "LOC"], [3, 5, "PER"], [7, 9, "ORG"]], "pred": [[0, 1, "PER"], [4, 5, "PER"]]},
]


def key(s):
    return (s[0], s[1], s[2] if len(s) > 2 else "")


def common(a, b):
    return max(0, min(a[1], b[1]) - max(a[0], b[0]))


def gap(a, b):
    return max(0, b[0] - a[1], a[0] - b[1])


def pair(pred, gold, n, win):
    """List of (pred, gold or None, rule) following the four rules."""
    pred = sorted(pred, key=key)
    gold = sorted(gold, key=key)
    if not pred:
        return [([0, n], g, "whole") for g in gold]
    if len(pred) == len(gold):
        return [(p, g, "seq") for p, g in zip(pred, gold)]
    out = []
    for p in pred:
        cands = [(-common(p, g), abs(p[0] - g[0]), i) for i, g in enumerate(gold) if common(p, g) > 0]
        if cands:
            out.append((p, gold[min(cands)[2]], "overlap"))
            continue
        cands = [(gap(p, g), abs(p[0] - g[0]), i) for i, g in enumerate(gold)
                 if win is None or gap(p, g) < win]
        out.append((p, gold[min(cands)[2]] if cands else None, "window"))
    return out


def f1(pred_sets, gold_sets):
    tp = npred = ngold = 0
    for p, g in zip(pred_sets, gold_sets):
        pk = [key(x) for x in p]
        gk = [key(x) for x in g]
        npred += len(pk)
        ngold += len(gk)
        left = list(gk)
        for x in pk:
            if x in left:
                left.remove(x)
                tp += 1
    if npred == 0 and ngold == 0:
        return Fraction(1), Fraction(1), Fraction(1)
    prec = Fraction(tp, npred) if npred else Fraction(0)
    rec = Fraction(tp, ngold) if ngold else Fraction(0)
    f = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
    return prec, rec, f


def consistency(win):
    reached, gold = [], []
    for s in CONSISTENCY:
        got = []
        for _, g, _ in pair(s["pred"], s["gold"], s["len"], win):
            if g is not None and key(g) not in [key(x) for x in got]:
                got.append(g)
        reached.append(got)
        gold.append(s["gold"])
    return f1(reached, gold)[2]


def classify(p, g):
    if common(p, g) == 0:
        return "no_overlap"
    if p[0] == g[0] and p[1] == g[1]:
        return "exact"
    if p[0] <= g[0] and g[1] <= p[1]:
        return "adding"
    if g[0] <= p[0] and p[1] <= g[1]:
        return "missing"
    return "common"


def oracle(mode):
    fixed = []
    for s in ORACLE:
        pred = [list(x) for x in sorted(s["pred"], key=key)]
        gold = sorted(s["gold"], key=key)
        lock, used = set(), set()
        for same in (lambda a, b: key(a) == key(b), lambda a, b: a[:2] == b[:2]):
            for i, p in enumerate(pred):
                if i in lock:
                    continue
                for j, g in enumerate(gold):
                    if j not in used and same(p, g):
                        lock.add(i)
                        used.add(j)
                        if mode == "type":
                            p[2] = g[2]
                        break
        rest = [i for i in range(len(pred)) if i not in lock]
        rest_gold = [g for j, g in enumerate(gold) if j not in used]
        for i, (_, g, _) in zip(rest, pair([pred[i] for i in rest], rest_gold, s["len"], None)):
            if g is None:
                continue
            if mode == "boundary":
                pred[i][0], pred[i][1] = g[0], g[1]
            else:
                pred[i][2] = g[2]
        fixed.append(pred)
    return f1(fixed, [s["gold"] for s in ORACLE])


def main():
    counts = {}
    for p, g in REPORT:
        c = classify(p, g)
        counts[c] = counts.get(c, 0) + 1
    base = f1([s["pred"] for s in ORACLE], [s["gold"] for s in ORACLE])
    out = {
        "consistency": {
            "sentences": CONSISTENCY,
            "f1": {"entire": float(consistency(None)), "1": float(consistency(1)),
                   "2": float(consistency(2)), "3": float(consistency(3))},
        },
        "report": {
            "pairs": REPORT,
            "test_size": len(REPORT),
            "errors": len(REPORT) - counts.get("exact", 0),
            "counts": counts,
        },
        "oracle": {
            "sentences": ORACLE,
            "baseline_f1": float(base[2]),
            "boundary_f1": float(oracle("boundary")[2]),
            "type_f1": float(oracle("type")[2]),
        },
    }
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()

// Copyright 2026 The Calibre Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Upper-bound analysis: how high entity F1 would go if every prediction's
// boundary (or type) were corrected while the other attribute is kept.

#include <string>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/eval/metrics.hpp"
#include "calibre/pairing/match.hpp"
#include "calibre/textcore/span.hpp"

namespace calibre {

enum class OracleMode { BoundaryCorrect, TypeCorrect };

/// Applies the oracle correction to one sentence.
///
/// Predictions that already agree with a gold entity (first on bounds and
/// type, then on bounds alone) are locked to it one-to-one; the remaining
/// predictions are paired with the remaining gold entities by the
/// match_entities rules. Locking first means a correct prediction is never
/// rewritten, so corrected F1 is never below the baseline.
inline std::vector<Span> oracle_correct(const std::vector<Span>& preds,
                                        const std::vector<Span>& golds, int sentence_len,
                                        OracleMode mode, const MatchConfig& cfg = {}) {
  std::vector<Span> out = sorted_spans(preds);
  const auto gold = sorted_spans(golds);
  std::vector<bool> locked(out.size(), false);
  std::vector<bool> used(gold.size(), false);

  auto lock_pass = [&](auto&& same) {
    for (std::size_t p = 0; p < out.size(); ++p) {
      if (locked[p]) continue;
      for (std::size_t g = 0; g < gold.size(); ++g) {
        if (!used[g] && same(out[p], gold[g])) {
          locked[p] = used[g] = true;
          if (mode == OracleMode::TypeCorrect) out[p].label = gold[g].label;
          break;
        }
      }
    }
  };
  lock_pass([](const Span& a, const Span& b) { return a == b; });
  lock_pass([](const Span& a, const Span& b) { return a.same_bounds(b); });

  std::vector<Span> rest_pred, rest_gold;
  std::vector<std::size_t> rest_pred_idx;
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (!locked[p]) {
      rest_pred.push_back(out[p]);
      rest_pred_idx.push_back(p);
    }
  }
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (!used[g]) rest_gold.push_back(gold[g]);
  }
  if (rest_pred.empty()) return out;

  // rest_pred is already start-sorted, so report pairs line up with it.
  const MatchReport report = match_entities(rest_pred, rest_gold, sentence_len, cfg);
  for (std::size_t k = 0; k < report.pairs.size(); ++k) {
    const auto& pair = report.pairs[k];
    if (!pair.gold) continue;
    Span& target = out[rest_pred_idx[k]];
    if (mode == OracleMode::BoundaryCorrect) {
      target.start = pair.gold->start;
      target.end = pair.gold->end;
    } else {
      target.label = pair.gold->label;
    }
  }
  return out;
}

inline Prf oracle_upper_bounds(const std::vector<std::vector<Span>>& preds,
                               const std::vector<std::vector<Span>>& golds,
                               const std::vector<int>& sentence_lengths, OracleMode mode,
                               const MatchConfig& cfg = {}) {
  if (preds.size() != golds.size() || preds.size() != sentence_lengths.size()) {
    throw InvalidArgument("oracle_upper_bounds: misaligned sentence lists");
  }
  std::vector<std::vector<Span>> corrected;
  corrected.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    corrected.push_back(oracle_correct(preds[i], golds[i], sentence_lengths[i], mode, cfg));
  }
  return entity_f1(corrected, golds);
}

}  // namespace calibre

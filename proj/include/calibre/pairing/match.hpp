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

// Pairs first-pass NER predictions ("noisy" entities) with gold entities of
// the same sentence so each prediction becomes a calibration target.
//
// Rules, in precedence order:
//   1. Sequential     equal counts: i-th prediction with i-th gold.
//   2. Overlap        otherwise, the gold sharing the most tokens; ties go
//                     to the smaller |start difference|, then the earlier gold.
//   3. Window         no shared token: the nearest gold (by token gap) whose
//                     span touches the prediction widened by n_win tokens on
//                     each side, or any gold when n_win is unset.
//   4. WholeSentence  no predictions: the whole sentence is the noisy answer
//                     for every gold.

#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/textcore/span.hpp"

namespace calibre {

struct MatchConfig {
  /// Context window in tokens; unset searches the entire sentence.
  std::optional<int> n_win;

  void validate() const {
    if (n_win && *n_win < 1) throw InvalidArgument("MatchConfig: n_win must be >= 1");
  }
};

enum class MatchRule { Sequential, Overlap, Window, WholeSentence };

inline const char* to_string(MatchRule r) {
  switch (r) {
    case MatchRule::Sequential: return "sequential";
    case MatchRule::Overlap: return "overlap";
    case MatchRule::Window: return "window";
    case MatchRule::WholeSentence: return "whole_sentence";
  }
  return "?";
}

struct MatchPair {
  Span noisy;
  /// Index into the start-sorted gold list, or nullopt when the window
  /// search found nothing (the prediction is kept but has no target).
  std::optional<std::size_t> gold_index;
  std::optional<Span> gold;
  MatchRule rule = MatchRule::Sequential;
};

struct MatchReport {
  std::vector<MatchPair> pairs;
};

/// Token gap between two disjoint spans; 0 when adjacent or overlapping.
inline int span_gap(const Span& a, const Span& b) {
  return std::max({0, b.start - a.end, a.start - b.end});
}

inline MatchReport match_entities(const std::vector<Span>& predicted,
                                  const std::vector<Span>& golden, int sentence_len,
                                  const MatchConfig& cfg = {}) {
  cfg.validate();
  const auto preds = sorted_spans(predicted);
  const auto golds = sorted_spans(golden);
  MatchReport report;

  if (preds.empty()) {
    for (std::size_t g = 0; g < golds.size(); ++g) {
      report.pairs.push_back({Span(0, sentence_len), g, golds[g], MatchRule::WholeSentence});
    }
    return report;
  }

  if (preds.size() == golds.size()) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      report.pairs.push_back({preds[i], i, golds[i], MatchRule::Sequential});
    }
    return report;
  }

  for (const auto& p : preds) {
    std::optional<std::size_t> best;
    int best_com = 0;
    int best_dist = 0;
    for (std::size_t g = 0; g < golds.size(); ++g) {
      const int com = p.common_tokens(golds[g]);
      const int dist = std::abs(p.start - golds[g].start);
      if (!best || com > best_com || (com == best_com && dist < best_dist)) {
        best = g;
        best_com = com;
        best_dist = dist;
      }
    }
    if (best && best_com > 0) {
      report.pairs.push_back({p, best, golds[*best], MatchRule::Overlap});
      continue;
    }

    std::optional<std::size_t> near;
    int near_gap = 0;
    int near_dist = 0;
    for (std::size_t g = 0; g < golds.size(); ++g) {
      const int gap = span_gap(p, golds[g]);
      if (cfg.n_win && gap >= *cfg.n_win) continue;
      const int dist = std::abs(p.start - golds[g].start);
      if (!near || gap < near_gap || (gap == near_gap && dist < near_dist)) {
        near = g;
        near_gap = gap;
        near_dist = dist;
      }
    }
    MatchPair pair{p, near, std::nullopt, MatchRule::Window};
    if (near) pair.gold = golds[*near];
    report.pairs.push_back(std::move(pair));
  }
  return report;
}

}  // namespace calibre

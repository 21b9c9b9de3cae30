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

#include <set>
#include <string>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/eval/metrics.hpp"
#include "calibre/pairing/match.hpp"
#include "calibre/textcore/bio.hpp"
#include "calibre/textcore/pbr_jsonl.hpp"

namespace calibre {

/// Gold entities of one sentence that some pair points at.
inline std::vector<Span> reachable_golds(const MatchReport& report) {
  std::set<std::size_t> seen;
  std::vector<Span> out;
  for (const auto& p : report.pairs) {
    if (p.gold_index && p.gold && seen.insert(*p.gold_index).second) out.push_back(*p.gold);
  }
  return out;
}

/// Entity-level F1 between the gold entities recoverable through the pairs
/// and the original gold entities. Only recall can drop below 1.
inline double window_consistency_f1(const std::vector<LabeledSentence>& labeled,
                                    const std::vector<MatchReport>& reports) {
  if (labeled.size() != reports.size()) {
    throw InvalidArgument("window_consistency_f1: " + std::to_string(labeled.size()) +
                          " sentences but " + std::to_string(reports.size()) + " reports");
  }
  std::vector<std::vector<Span>> reached, gold;
  reached.reserve(labeled.size());
  gold.reserve(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    reached.push_back(reachable_golds(reports[i]));
    gold.push_back(labeled[i].spans());
  }
  return entity_f1(reached, gold).f1;
}

/// NER-mode calibration examples from one sentence's pairs. Pairs without a
/// gold target are skipped. Ids are "<sentence_id>:<pair index>".
inline std::vector<CalibrationExample> pairs_to_examples(const LabeledSentence& sentence,
                                                         const MatchReport& report,
                                                         const std::string& sentence_id,
                                                         const std::string& language) {
  std::vector<CalibrationExample> out;
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    const auto& p = report.pairs[i];
    if (!p.gold) continue;
    CalibrationExample ex;
    ex.id = sentence_id + ":" + std::to_string(i);
    ex.question = TokenSeq::from_tokens({"[PAD]"});
    ex.passage = sentence.tokens;
    ex.noisy = Span(p.noisy.start, p.noisy.end);
    ex.gold = *p.gold;
    ex.gold_type = p.gold->label;
    ex.language = language;
    ex.validate();
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace calibre

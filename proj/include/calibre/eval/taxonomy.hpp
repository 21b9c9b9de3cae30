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

// Boundary error taxonomy. A prediction is compared with a gold span and
// lands in exactly one category:
//
//   Exact        same bounds, same type
//   TypeOnly     same bounds, different type
//   AddingSpan   prediction strictly contains the gold span
//   MissingSpan  prediction strictly inside the gold span
//   CommonSpan   partial overlap, neither contains the other
//   NoOverlap    disjoint (including empty predictions)
//
// Spurious and Missed only arise in NER reports, where predictions without
// any overlapping gold and gold entities nobody touched are tallied apart.

#include <array>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/textcore/span.hpp"
#include "json.hpp"

namespace calibre {

enum class ErrorCategory {
  Exact,
  TypeOnly,
  AddingSpan,
  MissingSpan,
  CommonSpan,
  NoOverlap,
  Spurious,
  Missed,
};

inline constexpr std::array<ErrorCategory, 8> kAllCategories = {
    ErrorCategory::Exact,      ErrorCategory::TypeOnly,  ErrorCategory::AddingSpan,
    ErrorCategory::MissingSpan, ErrorCategory::CommonSpan, ErrorCategory::NoOverlap,
    ErrorCategory::Spurious,   ErrorCategory::Missed};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Exact: return "exact";
    case ErrorCategory::TypeOnly: return "type_only";
    case ErrorCategory::AddingSpan: return "adding";
    case ErrorCategory::MissingSpan: return "missing";
    case ErrorCategory::CommonSpan: return "common";
    case ErrorCategory::NoOverlap: return "no_overlap";
    case ErrorCategory::Spurious: return "spurious";
    case ErrorCategory::Missed: return "missed";
  }
  return "?";
}

inline ErrorCategory classify_error(const Span& pred, const Span& gold) {
  if (pred.empty() || !pred.overlaps(gold)) return ErrorCategory::NoOverlap;
  if (pred.same_bounds(gold)) {
    return pred.label == gold.label ? ErrorCategory::Exact : ErrorCategory::TypeOnly;
  }
  if (pred.strictly_contains(gold)) return ErrorCategory::AddingSpan;
  if (gold.strictly_contains(pred)) return ErrorCategory::MissingSpan;
  return ErrorCategory::CommonSpan;
}

/// Error counts for one language, in the column layout
/// test size | errors | no overlap | adding | missing | common
/// plus the NER-only columns.
struct ErrorReport {
  std::string language;
  long long test_size = 0;
  long long error_cases = 0;
  std::array<long long, kAllCategories.size()> counts{};

  long long count(ErrorCategory c) const { return counts[static_cast<std::size_t>(c)]; }
  void add(ErrorCategory c) {
    ++counts[static_cast<std::size_t>(c)];
    ++test_size;
    if (c != ErrorCategory::Exact) ++error_cases;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["language"] = language;
    j["test_size"] = test_size;
    j["errors"] = error_cases;
    for (auto c : {ErrorCategory::NoOverlap, ErrorCategory::AddingSpan, ErrorCategory::MissingSpan,
                   ErrorCategory::CommonSpan, ErrorCategory::TypeOnly, ErrorCategory::Spurious,
                   ErrorCategory::Missed}) {
      j[to_string(c)] = count(c);
    }
    return j;
  }
};

/// One prediction per gold answer (reading comprehension layout).
inline ErrorReport error_report(const std::vector<Span>& preds, const std::vector<Span>& golds,
                                const std::string& language) {
  if (preds.size() != golds.size()) {
    throw InvalidArgument("error_report: " + std::to_string(preds.size()) + " predictions vs " +
                          std::to_string(golds.size()) + " gold answers");
  }
  ErrorReport r;
  r.language = language;
  for (std::size_t i = 0; i < preds.size(); ++i) r.add(classify_error(preds[i], golds[i]));
  return r;
}

/// Sentence-aligned entity sets (NER layout). Each prediction is compared
/// with an exact match if one is left, else a same-bounds gold, else the
/// gold it shares most tokens with; gold entities never compared count as
/// Missed.
inline ErrorReport error_report(const std::vector<std::vector<Span>>& preds,
                                const std::vector<std::vector<Span>>& golds,
                                const std::string& language) {
  if (preds.size() != golds.size()) {
    throw InvalidArgument("error_report: " + std::to_string(preds.size()) +
                          " predicted sentences vs " + std::to_string(golds.size()) + " gold");
  }
  ErrorReport r;
  r.language = language;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    const auto pred = sorted_spans(preds[s]);
    const auto gold = sorted_spans(golds[s]);
    std::vector<bool> pred_done(pred.size(), false);
    std::vector<bool> gold_used(gold.size(), false);
    auto first_unused = [&](auto&& accept) -> std::optional<std::size_t> {
      for (std::size_t g = 0; g < gold.size(); ++g) {
        if (!gold_used[g] && accept(gold[g])) return g;
      }
      return std::nullopt;
    };
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (auto g = first_unused([&](const Span& x) { return x == pred[p]; })) {
        gold_used[*g] = true;
        pred_done[p] = true;
        r.add(ErrorCategory::Exact);
      }
    }
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (pred_done[p]) continue;
      if (auto g = first_unused([&](const Span& x) { return x.same_bounds(pred[p]); })) {
        gold_used[*g] = true;
        pred_done[p] = true;
        r.add(ErrorCategory::TypeOnly);
      }
    }
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (pred_done[p]) continue;
      std::optional<std::size_t> best;
      int best_com = 0;
      int best_dist = 0;
      for (std::size_t g = 0; g < gold.size(); ++g) {
        const int com = pred[p].common_tokens(gold[g]);
        const int dist = std::abs(pred[p].start - gold[g].start);
        if (com > 0 && (!best || com > best_com || (com == best_com && dist < best_dist))) {
          best = g;
          best_com = com;
          best_dist = dist;
        }
      }
      if (!best) {
        r.add(ErrorCategory::Spurious);
        continue;
      }
      gold_used[*best] = true;
      const ErrorCategory c = classify_error(pred[p], gold[*best]);
      // A same-bounds hit here is a duplicate of an entity already claimed.
      if (c == ErrorCategory::Exact || c == ErrorCategory::TypeOnly) {
        r.add(ErrorCategory::Spurious);
      } else {
        r.add(c);
      }
    }
    for (std::size_t g = 0; g < gold.size(); ++g) {
      if (!gold_used[g]) r.add(ErrorCategory::Missed);
    }
  }
  return r;
}

}  // namespace calibre

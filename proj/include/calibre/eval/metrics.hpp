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

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/textcore/span.hpp"

namespace calibre {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long true_positives = 0;
  long long predicted = 0;
  long long gold = 0;
};

inline Prf prf_from_counts(long long tp, long long n_pred, long long n_gold) {
  Prf r{0.0, 0.0, 0.0, tp, n_pred, n_gold};
  if (n_pred == 0 && n_gold == 0) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  r.precision = n_pred > 0 ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
  r.recall = n_gold > 0 ? static_cast<double>(tp) / static_cast<double>(n_gold) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

/// Exact (bounds and type) matches between two span multisets.
inline long long count_exact_matches(const std::vector<Span>& pred, const std::vector<Span>& gold) {
  std::map<Span, long long> bag;
  for (const auto& g : gold) ++bag[g];
  long long tp = 0;
  for (const auto& p : pred) {
    auto it = bag.find(p);
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++tp;
    }
  }
  return tp;
}

inline Prf entity_f1(const std::vector<Span>& pred, const std::vector<Span>& gold) {
  return prf_from_counts(count_exact_matches(pred, gold), static_cast<long long>(pred.size()),
                         static_cast<long long>(gold.size()));
}

/// Micro-averaged over sentences.
inline Prf entity_f1(const std::vector<std::vector<Span>>& pred,
                     const std::vector<std::vector<Span>>& gold) {
  if (pred.size() != gold.size()) {
    throw InvalidArgument("entity_f1: " + std::to_string(pred.size()) + " predicted vs " +
                          std::to_string(gold.size()) + " gold sentences");
  }
  long long tp = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    tp += count_exact_matches(pred[i], gold[i]);
    np += static_cast<long long>(pred[i].size());
    ng += static_cast<long long>(gold[i].size());
  }
  return prf_from_counts(tp, np, ng);
}

/// SQuAD answer normalization: lowercase, drop ASCII punctuation, drop the
/// articles a/an/the, collapse whitespace. Returned as tokens.
inline std::vector<std::string> normalize_answer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    cleaned.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
  }
  std::vector<std::string> toks;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
    const std::size_t b = i;
    while (i < cleaned.size() && !std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
    if (i > b) {
      std::string tok = cleaned.substr(b, i - b);
      if (tok != "a" && tok != "an" && tok != "the") toks.push_back(std::move(tok));
    }
  }
  return toks;
}

struct SpanScore {
  double f1 = 0.0;
  double em = 0.0;
};

/// Token-bag F1 and exact match of one predicted answer, maximized over
/// the gold alternatives.
inline SpanScore span_f1_em(std::string_view pred_text, const std::vector<std::string>& gold_texts) {
  const auto pred = normalize_answer(pred_text);
  SpanScore best;
  for (const auto& g : gold_texts) {
    const auto gold = normalize_answer(g);
    SpanScore s;
    s.em = pred == gold ? 1.0 : 0.0;
    if (pred.empty() || gold.empty()) {
      s.f1 = s.em;
    } else {
      std::map<std::string, int> bag;
      for (const auto& t : gold) ++bag[t];
      int common = 0;
      for (const auto& t : pred) {
        auto it = bag.find(t);
        if (it != bag.end() && it->second > 0) {
          --it->second;
          ++common;
        }
      }
      if (common > 0) {
        const double p = static_cast<double>(common) / static_cast<double>(pred.size());
        const double r = static_cast<double>(common) / static_cast<double>(gold.size());
        s.f1 = 2.0 * p * r / (p + r);
      }
    }
    best.f1 = std::max(best.f1, s.f1);
    best.em = std::max(best.em, s.em);
  }
  return best;
}

}  // namespace calibre

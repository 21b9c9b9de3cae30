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

// Template questions "Wh + B + A + ?" for a passage read as
// "[A] [answer] [B]" inside the clause that holds the answer.

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "calibre/textcore/span.hpp"
#include "calibre/textcore/tokenize.hpp"

namespace calibre {

/// Maps answer tokens to a coarse type such as PERSON, LOCATION, DATE or
/// OTHER.
using Typer = std::function<std::string(const std::vector<std::string>&)>;

inline constexpr int kMaxQuestionContext = 10;

inline std::string wh_word(const std::string& type) {
  if (type == "PERSON" || type == "PER") return "who";
  if (type == "LOCATION" || type == "LOC") return "where";
  if (type == "DATE") return "when";
  return "what";
}

/// Gazetteer and shape rules standing in for a statistical entity typer.
class HeuristicTyper {
 public:
  std::string operator()(const std::vector<std::string>& answer) const {
    if (answer.empty()) return "OTHER";
    for (const auto& t : answer) {
      const std::string low = lower(t);
      if (months().count(low) || is_year(t)) return "DATE";
    }
    const std::string first = lower(answer.front());
    if (titles().count(first) || given_names().count(first)) return "PERSON";
    for (const auto& t : answer) {
      if (places().count(lower(t))) return "LOCATION";
    }
    return "OTHER";
  }

 private:
  static std::string lower(const std::string& s) {
    std::string out = s;
    for (auto& c : out) {
      if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(c));
    }
    return out;
  }

  static bool is_year(const std::string& t) {
    if (t.size() != 4 || !std::all_of(t.begin(), t.end(), [](char c) {
          return std::isdigit(static_cast<unsigned char>(c));
        })) {
      return false;
    }
    const int y = std::stoi(t);
    return y >= 1000 && y <= 2099;
  }

  static const std::set<std::string>& months() {
    static const std::set<std::string> s = {
        "january", "february", "march",  "april",   "may",     "june",    "july",
        "august",  "september", "october", "november", "december", "enero",  "febrero",
        "marzo",   "abril",    "mayo",   "junio",   "julio",   "agosto",  "januar",
        "februar", "märz",     "juni",   "juli",    "oktober", "dezember"};
    return s;
  }

  static const std::set<std::string>& titles() {
    static const std::set<std::string> s = {"mr", "mrs", "ms", "dr", "sir", "saint",
                                            "st", "herr", "frau", "don", "doña", "señor"};
    return s;
  }

  static const std::set<std::string>& given_names() {
    static const std::set<std::string> s = {
        "john",   "mary",  "peter",  "paul",   "george", "james",  "anna",  "maria",
        "juan",   "josé",  "carlos", "hans",   "karl",   "friedrich", "ludwig", "wolfgang",
        "angela", "elena", "pablo",  "miguel", "thomas", "william", "elizabeth", "charles"};
    return s;
  }

  static const std::set<std::string>& places() {
    static const std::set<std::string> s = {
        "germany", "spain",  "france", "england", "london",  "paris",   "berlin",
        "bonn",    "madrid", "rhine",  "europe",  "america", "mexico",  "munich",
        "münchen", "köln",   "cologne", "barcelona", "sevilla", "hamburg", "vienna",
        "wien",    "italy",  "rome",   "city",    "river",   "mountains"};
    return s;
  }
};

inline bool is_clause_boundary(const std::string& tok) {
  return tok == "." || tok == "!" || tok == "?" || tok == ";";
}

/// Token range of the clause that contains `gold`, bounded by clause
/// punctuation or the passage edges. The punctuation itself is excluded.
inline Span clause_around(const TokenSeq& passage, const Span& gold) {
  int b = gold.start;
  while (b > 0 && !is_clause_boundary(passage.tokens[b - 1])) --b;
  int e = gold.end;
  const int n = static_cast<int>(passage.size());
  while (e < n && !is_clause_boundary(passage.tokens[e])) ++e;
  return Span(b, e);
}

inline TokenSeq generate_question(const TokenSeq& passage, const Span& gold, const Typer& typer) {
  Span ctx = clause_around(passage, gold);
  if (ctx.length() > kMaxQuestionContext) {
    // Window of kMaxQuestionContext tokens centred on the answer.
    const int extra = std::max(0, kMaxQuestionContext - gold.length());
    int b = gold.start - extra / 2;
    int e = gold.end + (extra - extra / 2);
    if (b < ctx.start) {
      e += ctx.start - b;
      b = ctx.start;
    }
    if (e > ctx.end) {
      b = std::max(ctx.start, b - (e - ctx.end));
      e = ctx.end;
    }
    ctx = Span(b, e);
  }

  std::string type;
  try {
    const std::vector<std::string> answer(passage.tokens.begin() + gold.start,
                                          passage.tokens.begin() + gold.end);
    type = typer ? typer(answer) : "OTHER";
  } catch (...) {
    type = "OTHER";
  }

  std::vector<std::string> q{wh_word(type)};
  for (int i = gold.end; i < ctx.end; ++i) q.push_back(passage.tokens[i]);
  for (int i = ctx.start; i < gold.start; ++i) q.push_back(passage.tokens[i]);
  q.emplace_back("?");
  return TokenSeq::from_tokens(std::move(q));
}

}  // namespace calibre

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

// Calibration examples, one JSON object per line:
//
//   {"id": "...", "question": ["tok", ...] | null, "noisy_answer": "...",
//    "passage": ["tok", ...], "noisy_span": [s, e], "gold_span": [s, e],
//    "gold_type": "PER" | null, "language": "en"}
//
// Passages and questions are stored as token arrays so that re-reading a
// file never depends on re-tokenizing text. `noisy_answer` is informative
// only (the noisy span's tokens joined by spaces).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/io.hpp"
#include "calibre/textcore/span.hpp"
#include "calibre/textcore/tokenize.hpp"
#include "json.hpp"

namespace calibre {

/// (question?, noisy answer, passage) with the gold span to recover.
struct CalibrationExample {
  std::string id;
  std::optional<TokenSeq> question;
  Span noisy;
  TokenSeq passage;
  Span gold;
  std::optional<std::string> gold_type;
  std::string language;

  void validate() const {
    const int n = static_cast<int>(passage.size());
    if (!noisy.valid_in(n)) {
      throw FormatError("calibration example '" + id + "': noisy span outside passage");
    }
    if (!gold.valid_in(n)) {
      throw FormatError("calibration example '" + id + "': gold span outside passage");
    }
  }
};

namespace detail {

inline Span span_from_json(const nlohmann::json& j, const std::string& id, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer()) {
    throw FormatError("calibration example '" + id + "': '" + field + "' must be [start, end]");
  }
  return Span(j[0].get<int>(), j[1].get<int>());
}

inline std::vector<std::string> tokens_from_json(const nlohmann::json& j, const std::string& id,
                                                 const char* field) {
  if (!j.is_array()) {
    throw FormatError("calibration example '" + id + "': '" + field + "' must be a token array");
  }
  std::vector<std::string> toks;
  for (const auto& t : j) {
    if (!t.is_string() || t.get_ref<const std::string&>().empty()) {
      throw FormatError("calibration example '" + id + "': bad token in '" + field + "'");
    }
    toks.push_back(t.get<std::string>());
  }
  return toks;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const CalibrationExample& ex) {
  nlohmann::ordered_json j;
  j["id"] = ex.id;
  if (ex.question) {
    j["question"] = ex.question->tokens;
  } else {
    j["question"] = nullptr;
  }
  j["noisy_answer"] = join_tokens(ex.passage.tokens, ex.noisy.start, ex.noisy.end);
  j["passage"] = ex.passage.tokens;
  j["noisy_span"] = {ex.noisy.start, ex.noisy.end};
  j["gold_span"] = {ex.gold.start, ex.gold.end};
  if (ex.gold_type) {
    j["gold_type"] = *ex.gold_type;
  } else {
    j["gold_type"] = nullptr;
  }
  j["language"] = ex.language;
  return j;
}

inline CalibrationExample example_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("calibration example: not an object");
  CalibrationExample ex;
  if (!j.contains("id") || !j["id"].is_string()) {
    throw FormatError("calibration example: missing string 'id'");
  }
  ex.id = j["id"].get<std::string>();
  for (const char* f : {"passage", "noisy_span", "gold_span"}) {
    if (!j.contains(f)) throw FormatError("calibration example '" + ex.id + "': missing '" + f + "'");
  }
  if (j.contains("question") && !j["question"].is_null()) {
    ex.question = TokenSeq::from_tokens(detail::tokens_from_json(j["question"], ex.id, "question"));
  }
  ex.passage = TokenSeq::from_tokens(detail::tokens_from_json(j["passage"], ex.id, "passage"));
  ex.noisy = detail::span_from_json(j["noisy_span"], ex.id, "noisy_span");
  ex.gold = detail::span_from_json(j["gold_span"], ex.id, "gold_span");
  if (j.contains("gold_type") && !j["gold_type"].is_null()) {
    if (!j["gold_type"].is_string()) {
      throw FormatError("calibration example '" + ex.id + "': 'gold_type' must be a string");
    }
    ex.gold_type = j["gold_type"].get<std::string>();
    ex.gold.label = ex.gold_type;
  }
  if (j.contains("language") && j["language"].is_string()) {
    ex.language = j["language"].get<std::string>();
  }
  ex.validate();
  return ex;
}

inline std::string emit_pbr_jsonl(const std::vector<CalibrationExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += to_json(ex).dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<CalibrationExample> parse_pbr_jsonl(std::string_view bytes) {
  std::vector<CalibrationExample> out;
  for_each_jsonl(bytes, [&](const nlohmann::json& j, std::size_t line) {
    try {
      out.push_back(example_from_json(j));
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace calibre

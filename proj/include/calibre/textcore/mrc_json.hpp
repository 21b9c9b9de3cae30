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

// SQuAD v1.1 shaped reading-comprehension files. Answer offsets in the file
// are code-point indices into the context; in memory they become token
// spans over the tokenized context.

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/textcore/span.hpp"
#include "calibre/textcore/tokenize.hpp"
#include "json.hpp"

namespace calibre {

struct MrcAnswer {
  Span span;
  std::string text;
};

struct MrcRecord {
  std::string id;
  std::string title;
  TokenSeq question;
  TokenSeq passage;
  std::vector<MrcAnswer> answers;
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError(where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw FormatError(where + ": field '" + key + "' is not a string");
  return v.get<std::string>();
}

/// Token index whose offsets start (or end) exactly at `byte`, or -1.
inline int token_starting_at(const TokenSeq& seq, std::size_t byte) {
  for (std::size_t i = 0; i < seq.offsets.size(); ++i) {
    if (seq.offsets[i].begin == byte) return static_cast<int>(i);
  }
  return -1;
}

inline int token_ending_at(const TokenSeq& seq, std::size_t byte) {
  for (std::size_t i = 0; i < seq.offsets.size(); ++i) {
    if (seq.offsets[i].end == byte) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace detail

/// Maps a character-offset answer onto passage tokens. Throws FormatError
/// naming `id` when the answer does not start and end on token boundaries
/// or its text does not match the context.
inline Span align_answer(const TokenSeq& passage, std::size_t char_start,
                         const std::string& text, const std::string& id) {
  const std::size_t b = utf8_byte_offset(passage.source, char_start);
  if (b == std::string_view::npos || b + text.size() > passage.source.size() ||
      passage.source.compare(b, text.size(), text) != 0) {
    throw FormatError("mrc record '" + id + "': answer text does not match context at " +
                      std::to_string(char_start));
  }
  const int first = detail::token_starting_at(passage, b);
  const int last = detail::token_ending_at(passage, b + text.size());
  if (first < 0 || last < first) {
    throw FormatError("mrc record '" + id + "': answer_start " + std::to_string(char_start) +
                      " is not aligned to a token boundary");
  }
  return Span(first, last + 1);
}

inline std::vector<MrcRecord> parse_mrc_json(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("mrc json: ") + e.what());
  }
  const auto& data = detail::require(doc, "data", "mrc json");
  if (!data.is_array()) throw FormatError("mrc json: 'data' is not an array");

  std::vector<MrcRecord> out;
  std::set<std::string> seen;
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string where = "mrc json data[" + std::to_string(a) + "]";
    const auto& article = data[a];
    std::string title;
    if (article.is_object() && article.contains("title") && article["title"].is_string()) {
      title = article["title"].get<std::string>();
    }
    const auto& paragraphs = detail::require(article, "paragraphs", where);
    for (const auto& para : paragraphs) {
      const std::string context = detail::require_string(para, "context", where);
      const TokenSeq passage = tokenize(context);
      for (const auto& qa : detail::require(para, "qas", where)) {
        MrcRecord rec;
        rec.id = detail::require_string(qa, "id", where);
        if (!seen.insert(rec.id).second) {
          throw FormatError("mrc record '" + rec.id + "': duplicate id");
        }
        rec.title = title;
        rec.question = tokenize(detail::require_string(qa, "question", rec.id));
        rec.passage = passage;
        for (const auto& ans : detail::require(qa, "answers", rec.id)) {
          const std::string text = detail::require_string(ans, "text", rec.id);
          const auto& start = detail::require(ans, "answer_start", rec.id);
          if (!start.is_number_integer() || start.get<long long>() < 0) {
            throw FormatError("mrc record '" + rec.id + "': bad answer_start");
          }
          rec.answers.push_back(
              {align_answer(passage, start.get<std::size_t>(), text, rec.id), text});
        }
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

/// Writes records back in SQuAD layout. Consecutive records sharing title
/// and context are grouped into one paragraph.
inline std::string emit_mrc_json(const std::vector<MrcRecord>& records) {
  nlohmann::ordered_json data = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const bool same_article = i > 0 && records[i - 1].title == rec.title;
    const bool same_para = same_article && records[i - 1].passage.source == rec.passage.source;
    if (!same_article) {
      nlohmann::ordered_json article;
      article["title"] = rec.title;
      article["paragraphs"] = nlohmann::ordered_json::array();
      data.push_back(std::move(article));
    }
    auto& paragraphs = data.back()["paragraphs"];
    if (!same_para) {
      nlohmann::ordered_json para;
      para["context"] = rec.passage.source;
      para["qas"] = nlohmann::ordered_json::array();
      paragraphs.push_back(std::move(para));
    }
    nlohmann::ordered_json qa;
    qa["id"] = rec.id;
    qa["question"] = rec.question.source;
    qa["answers"] = nlohmann::ordered_json::array();
    for (const auto& ans : rec.answers) {
      if (!ans.span.valid_in(static_cast<int>(rec.passage.size()))) {
        throw InvalidArgument("emit_mrc_json: answer span outside passage in '" + rec.id + "'");
      }
      const std::size_t b = rec.passage.offsets[ans.span.start].begin;
      nlohmann::ordered_json a;
      a["text"] = ans.text;
      a["answer_start"] = utf8_char_index(rec.passage.source, b);
      qa["answers"].push_back(std::move(a));
    }
    paragraphs.back()["qas"].push_back(std::move(qa));
  }
  nlohmann::ordered_json doc;
  doc["version"] = "1.1";
  doc["data"] = std::move(data);
  return doc.dump() + "\n";
}

}  // namespace calibre

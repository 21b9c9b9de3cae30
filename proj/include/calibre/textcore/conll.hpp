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

// CoNLL-style NER files: one "token<space or tab>tag" pair per line and a
// blank line after every sentence. The canonical form written by
// emit_conll uses a single space and IOB2 tags.

#include <string>
#include <string_view>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/textcore/bio.hpp"
#include "calibre/textcore/tokenize.hpp"

namespace calibre {

inline std::vector<LabeledSentence> parse_conll(std::string_view bytes) {
  std::vector<LabeledSentence> out;
  std::vector<std::string> toks;
  std::vector<std::string> tags;
  auto flush = [&] {
    if (toks.empty()) return;
    LabeledSentence s;
    s.tokens = TokenSeq::from_tokens(std::move(toks));
    s.labels = repair_bio(tags);
    out.push_back(std::move(s));
    toks.clear();
    tags.clear();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    std::string_view line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      const std::size_t b = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      if (i > b) fields.push_back(line.substr(b, i - b));
    }
    if (fields.empty()) {
      flush();
      continue;
    }
    if (fields.size() != 2) {
      throw FormatError("conll line " + std::to_string(line_no) +
                        ": expected 'token tag', got " + std::to_string(fields.size()) +
                        " fields");
    }
    if (!parse_bio_tag(fields[1]) || fields[1] == "B" || fields[1] == "I") {
      throw FormatError("conll line " + std::to_string(line_no) + ": unknown tag '" +
                        std::string(fields[1]) + "'");
    }
    toks.emplace_back(fields[0]);
    tags.emplace_back(fields[1]);
  }
  flush();
  return out;
}

inline std::string emit_conll(const std::vector<LabeledSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (s.labels.size() != s.tokens.size()) {
      throw InvalidArgument("emit_conll: label count differs from token count");
    }
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out += s.tokens[i];
      out.push_back(' ');
      out += s.labels[i];
      out.push_back('\n');
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace calibre

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

#include <string>
#include <string_view>
#include <vector>

#include "calibre/textcore/tokenize.hpp"

namespace calibre {

struct AnchorExtraction {
  std::string plain_text;
  /// Byte ranges of each link's display text within plain_text.
  std::vector<CharRange> anchors;
  /// Links left as raw text because their brackets did not balance.
  int skipped = 0;
};

namespace detail {

inline bool is_section_title(std::string_view line) {
  while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) {
    line.remove_suffix(1);
  }
  return line.size() >= 2 && line.front() == '=' && line.back() == '=';
}

}  // namespace detail

/// Replaces [[target|display]] and [[display]] links by their display text
/// and records where each display text landed. Section title lines
/// ("== History ==") are removed and runs of two or more apostrophes
/// (bold/italic markup) are dropped; all other markup stays as text.
///
/// A link whose "]]" is missing on the same line, or that contains another
/// "[[" before closing, or has an empty display text, is malformed: its "[["
/// is kept verbatim and it is counted in `skipped`.
inline AnchorExtraction extract_anchors(std::string_view wikitext) {
  AnchorExtraction out;
  std::string& plain = out.plain_text;
  plain.reserve(wikitext.size());

  std::size_t pos = 0;
  while (pos < wikitext.size()) {
    std::size_t nl = wikitext.find('\n', pos);
    const bool has_nl = nl != std::string_view::npos;
    if (!has_nl) nl = wikitext.size();
    const std::string_view line = wikitext.substr(pos, nl - pos);
    pos = has_nl ? nl + 1 : nl;
    if (detail::is_section_title(line)) continue;

    std::size_t i = 0;
    while (i < line.size()) {
      if (line.compare(i, 2, "[[") == 0) {
        const std::size_t close = line.find("]]", i + 2);
        const std::size_t reopen = line.find("[[", i + 2);
        bool ok = close != std::string_view::npos &&
                  (reopen == std::string_view::npos || close < reopen);
        std::string_view display;
        if (ok) {
          const std::string_view inner = line.substr(i + 2, close - i - 2);
          const std::size_t bar = inner.rfind('|');
          display = bar == std::string_view::npos ? inner : inner.substr(bar + 1);
          ok = display.find_first_not_of(" \t") != std::string_view::npos;
        }
        if (!ok) {
          ++out.skipped;
          plain += "[[";
          i += 2;
          continue;
        }
        const std::size_t lead = display.find_first_not_of(" \t");
        const std::size_t tail = display.size() - 1 - display.find_last_not_of(" \t");
        const std::size_t b = plain.size();
        plain += display;
        out.anchors.push_back({b + lead, plain.size() - tail});
        i = close + 2;
        continue;
      }
      if (line.compare(i, 2, "''") == 0) {
        while (i < line.size() && line[i] == '\'') ++i;
        continue;
      }
      plain.push_back(line[i]);
      ++i;
    }
    if (has_nl) plain.push_back('\n');
  }
  return out;
}

}  // namespace calibre

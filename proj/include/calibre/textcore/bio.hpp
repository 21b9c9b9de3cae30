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

#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/textcore/span.hpp"
#include "calibre/textcore/tokenize.hpp"

namespace calibre {

/// A BIO tag split into its prefix ('O', 'B', 'I') and optional type.
struct BioTag {
  char prefix = 'O';
  std::optional<std::string> type;
};

/// Parses "O", "B", "I", "B-T", "I-T". Returns nullopt for anything else.
inline std::optional<BioTag> parse_bio_tag(std::string_view tag) {
  if (tag == "O") return BioTag{'O', std::nullopt};
  if (tag.empty() || (tag[0] != 'B' && tag[0] != 'I')) return std::nullopt;
  if (tag.size() == 1) return BioTag{tag[0], std::nullopt};
  if (tag[1] != '-' || tag.size() == 2) return std::nullopt;
  return BioTag{tag[0], std::string(tag.substr(2))};
}

inline std::string bio_tag(char prefix, const std::optional<std::string>& type) {
  if (prefix == 'O') return "O";
  std::string out(1, prefix);
  if (type) out += "-" + *type;
  return out;
}

/// Encodes non-overlapping spans as a BIO sequence of the given length.
/// Adjacent spans of the same type stay distinct (second one opens with B).
inline std::vector<std::string> emit_bio(const std::vector<Span>& spans, int length) {
  if (length < 0) throw InvalidArgument("emit_bio: negative length");
  const auto sorted = sorted_spans(spans);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!sorted[i].valid_in(length)) {
      std::ostringstream msg;
      msg << "emit_bio: span " << sorted[i] << " outside [0," << length << ")";
      throw InvalidArgument(msg.str());
    }
    if (i > 0 && sorted[i - 1].overlaps(sorted[i])) {
      std::ostringstream msg;
      msg << "emit_bio: spans " << sorted[i - 1] << " and " << sorted[i] << " overlap";
      throw InvalidArgument(msg.str());
    }
  }
  std::vector<std::string> labels(static_cast<std::size_t>(length), "O");
  for (const auto& s : sorted) {
    labels[s.start] = bio_tag('B', s.label);
    for (int k = s.start + 1; k < s.end; ++k) labels[k] = bio_tag('I', s.label);
  }
  return labels;
}

/// Decodes maximal typed spans. An "I-T" that does not continue an open
/// span of type T starts a new span, as if it were "B-T". Unrecognized
/// tags are treated as "O".
inline std::vector<Span> spans_from_bio(const std::vector<std::string>& labels) {
  std::vector<Span> out;
  std::optional<Span> open;
  auto close = [&] {
    if (open) out.push_back(*open);
    open.reset();
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto tag = parse_bio_tag(labels[i]);
    const int pos = static_cast<int>(i);
    if (!tag || tag->prefix == 'O') {
      close();
    } else if (tag->prefix == 'I' && open && open->label == tag->type) {
      open->end = pos + 1;
    } else {
      close();
      open = Span(pos, pos + 1, tag->type);
    }
  }
  close();
  return out;
}

/// Rewrites dangling "I-T" tags as "B-T" (IOB1 to IOB2).
inline std::vector<std::string> repair_bio(const std::vector<std::string>& labels) {
  return emit_bio(spans_from_bio(labels), static_cast<int>(labels.size()));
}

/// A tokenized sentence with one BIO tag per token.
struct LabeledSentence {
  TokenSeq tokens;
  std::vector<std::string> labels;

  std::vector<Span> spans() const { return spans_from_bio(labels); }
};

}  // namespace calibre

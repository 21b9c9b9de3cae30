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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "calibre/error.hpp"

namespace calibre {

/// Half-open token interval [start, end) with an optional type label.
struct Span {
  int start = 0;
  int end = 0;
  std::optional<std::string> label;

  Span() = default;
  Span(int s, int e) : start(s), end(e) {}
  Span(int s, int e, std::optional<std::string> l) : start(s), end(e), label(std::move(l)) {}

  int length() const { return end - start; }
  bool empty() const { return end <= start; }

  bool valid_in(int seq_len) const { return 0 <= start && start < end && end <= seq_len; }

  bool same_bounds(const Span& o) const { return start == o.start && end == o.end; }

  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }

  /// Number of token positions shared with `o`.
  int common_tokens(const Span& o) const {
    return std::max(0, std::min(end, o.end) - std::max(start, o.start));
  }

  /// Strict containment: `this` ⊋ `o`.
  bool strictly_contains(const Span& o) const {
    return start <= o.start && o.end <= end && !same_bounds(o);
  }

  friend bool operator==(const Span&, const Span&) = default;

  /// Orders by (start, end, label); nullopt labels first.
  friend bool operator<(const Span& a, const Span& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end < b.end;
    return a.label < b.label;
  }
};

inline std::ostream& operator<<(std::ostream& os, const Span& s) {
  os << "[" << s.start << "," << s.end << ")";
  if (s.label) os << ":" << *s.label;
  return os;
}

inline std::vector<Span> sorted_spans(std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end());
  return spans;
}

}  // namespace calibre

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

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "calibre/error.hpp"

namespace calibre {

/// Half-open byte range into a source string.
struct CharRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const CharRange&, const CharRange&) = default;
};

/// Reserved tokens of the calibration model input. The tokenizer keeps
/// them whole so a question field of "[PAD]" stays a single token.
inline constexpr std::array<std::string_view, 5> kSpecialTokens = {
    "[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};

inline bool is_special_token(std::string_view tok) {
  for (auto s : kSpecialTokens) {
    if (s == tok) return true;
  }
  return false;
}

/// Tokenized text. `source` is the text the offsets index into.
struct TokenSeq {
  std::string source;
  std::vector<std::string> tokens;
  std::vector<CharRange> offsets;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens[i]; }

  /// Source text covered by tokens [begin, end).
  std::string slice_text(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > tokens.size()) return {};
    const std::size_t b = offsets[begin].begin;
    return source.substr(b, offsets[end - 1].end - b);
  }

  /// Builds a sequence whose source is the tokens joined by single spaces.
  /// Used for formats that store tokens rather than raw text.
  static TokenSeq from_tokens(std::vector<std::string> toks) {
    TokenSeq seq;
    seq.tokens = std::move(toks);
    seq.offsets.reserve(seq.tokens.size());
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
      if (seq.tokens[i].empty()) throw InvalidArgument("TokenSeq: empty token");
      if (i > 0) seq.source.push_back(' ');
      const std::size_t b = seq.source.size();
      seq.source += seq.tokens[i];
      seq.offsets.push_back({b, seq.source.size()});
    }
    return seq;
  }

  /// Equality on the token strings only.
  bool same_tokens(const TokenSeq& other) const { return tokens == other.tokens; }
};

namespace detail {

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_punct_byte(unsigned char c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) ||
         (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e);
}

}  // namespace detail

/// Whitespace split with every ASCII punctuation character as its own token.
/// Bytes >= 0x80 are word characters, so multi-byte UTF-8 sequences are never
/// split. Reserved tokens such as "[PAD]" are kept whole.
inline TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  out.source = std::string(text);
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto push = [&](std::size_t b, std::size_t e) {
    out.tokens.emplace_back(text.substr(b, e - b));
    out.offsets.push_back({b, e});
  };
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (detail::is_space_byte(c)) {
      ++i;
      continue;
    }
    if (c == '[') {
      bool matched = false;
      for (auto s : kSpecialTokens) {
        if (text.substr(i, s.size()) == s) {
          push(i, i + s.size());
          i += s.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    if (detail::is_punct_byte(c)) {
      push(i, i + 1);
      ++i;
      continue;
    }
    const std::size_t b = i;
    while (i < n) {
      const auto d = static_cast<unsigned char>(text[i]);
      if (detail::is_space_byte(d) || detail::is_punct_byte(d)) break;
      ++i;
    }
    push(b, i);
  }
  return out;
}

/// Byte offset of the `char_index`-th code point of a UTF-8 string, or
/// npos when the index is past the end. Continuation bytes do not start a
/// code point.
inline std::size_t utf8_byte_offset(std::string_view s, std::size_t char_index) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
    if (count == char_index) return i;
    ++count;
  }
  return count == char_index ? s.size() : std::string_view::npos;
}

/// Number of code points in the first `byte_offset` bytes.
inline std::size_t utf8_char_index(std::string_view s, std::size_t byte_offset) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < byte_offset && i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) ++count;
  }
  return count;
}

inline std::string join_tokens(const std::vector<std::string>& toks, std::size_t begin,
                               std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end && i < toks.size(); ++i) {
    if (i > begin) out.push_back(' ');
    out += toks[i];
  }
  return out;
}

}  // namespace calibre

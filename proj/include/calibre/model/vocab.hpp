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
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "calibre/error.hpp"
#include "calibre/textcore/tokenize.hpp"
#include "json.hpp"

namespace calibre {

/// Word vocabulary. The special tokens always take ids 0..4 in the order
/// [PAD] [CLS] [SEP] [MASK] [UNK].
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kMask = 3;
  static constexpr int kUnk = 4;
  static constexpr int kNumSpecial = 5;

  Vocab() {
    for (auto s : kSpecialTokens) add(std::string(s));
  }

  /// Words sorted lexicographically after the specials; `max_size` caps the
  /// total, keeping the most frequent words (ties lexicographic).
  static Vocab build(const std::map<std::string, long long>& counts, int max_size = 0) {
    std::vector<std::pair<long long, std::string>> ranked;
    for (const auto& [w, c] : counts) {
      if (!is_special_token(w)) ranked.emplace_back(-c, w);
    }
    std::sort(ranked.begin(), ranked.end());
    if (max_size > 0 && static_cast<int>(ranked.size()) > max_size - kNumSpecial) {
      ranked.resize(static_cast<std::size_t>(std::max(0, max_size - kNumSpecial)));
    }
    std::set<std::string> words;
    for (auto& r : ranked) words.insert(r.second);
    Vocab v;
    for (const auto& w : words) v.add(w);
    return v;
  }

  int size() const { return static_cast<int>(words_.size()); }
  int id(const std::string& w) const {
    auto it = ids_.find(w);
    return it == ids_.end() ? kUnk : it->second;
  }
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& words() const { return words_; }

  nlohmann::ordered_json to_json() const { return words_; }
  static Vocab from_json(const nlohmann::json& j) {
    Vocab v;
    const auto words = j.get<std::vector<std::string>>();
    if (words.size() < kNumSpecial) throw FormatError("vocab: missing special tokens");
    for (std::size_t i = 0; i < kNumSpecial; ++i) {
      if (words[i] != kSpecialTokens[i]) throw FormatError("vocab: specials out of order");
    }
    for (std::size_t i = kNumSpecial; i < words.size(); ++i) v.add(words[i]);
    return v;
  }

 private:
  void add(const std::string& w) {
    if (ids_.emplace(w, size()).second) words_.push_back(w);
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

/// Entity type names of the classification head, sorted.
using TypeList = std::vector<std::string>;

inline int type_index(const TypeList& types, const std::string& t) {
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (types[i] == t) return static_cast<int>(i);
  }
  return -1;
}

/// BIO label inventory for the base tagger: "O" then B-T, I-T per type.
inline std::vector<std::string> bio_labels(const TypeList& types) {
  std::vector<std::string> out{"O"};
  for (const auto& t : types) {
    out.push_back("B-" + t);
    out.push_back("I-" + t);
  }
  return out;
}

}  // namespace calibre

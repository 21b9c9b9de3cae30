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

// Passage mining from wiki pages. Each page is cut into paragraphs at blank
// lines; a paragraph becomes a passage when it has between min_tokens and
// max_tokens tokens and at least two anchors of at most max_anchor_tokens
// tokens. Anchors become the (untyped) gold answers.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calibre/corpus/wikitext.hpp"
#include "calibre/error.hpp"
#include "calibre/io.hpp"
#include "calibre/rng.hpp"
#include "calibre/textcore/span.hpp"
#include "calibre/textcore/tokenize.hpp"
#include "json.hpp"

namespace calibre {

struct WikiPage {
  std::string page_id;
  std::string language;
  std::string wikitext;

  void validate() const {
    const bool two_letters = language.size() == 2 &&
                             std::islower(static_cast<unsigned char>(language[0])) &&
                             std::islower(static_cast<unsigned char>(language[1]));
    if (!two_letters) {
      throw FormatError("wiki page '" + page_id + "': language must be a two-letter code");
    }
    if (wikitext.empty()) throw FormatError("wiki page '" + page_id + "': empty wikitext");
  }
};

struct Passage {
  std::string id;
  std::string language;
  TokenSeq text;
  std::vector<Span> anchors;
};

struct FilterConfig {
  int min_tokens = 50;
  int max_tokens = 250;
  int max_anchor_tokens = 8;
  int min_anchors = 2;
  /// Keep at most this many qualifying passages per page (seeded sample).
  std::optional<int> per_page_cap;
  std::uint64_t seed = 0;

  void validate() const {
    if (min_tokens < 1 || max_tokens < min_tokens) {
      throw InvalidArgument("FilterConfig: need 1 <= min_tokens <= max_tokens");
    }
    if (max_anchor_tokens < 1) throw InvalidArgument("FilterConfig: max_anchor_tokens < 1");
    if (per_page_cap && *per_page_cap < 1) throw InvalidArgument("FilterConfig: per_page_cap < 1");
  }
};

struct FilterStats {
  long long pages = 0;
  long long candidates = 0;
  long long too_short = 0;
  long long too_long = 0;
  long long too_few_anchors = 0;
  long long capped = 0;
  long long long_anchors_dropped = 0;
  long long misaligned_anchors_dropped = 0;
  long long overlapping_anchors_dropped = 0;
  long long malformed_links = 0;
  long long emitted = 0;

  nlohmann::ordered_json to_json() const {
    return {{"pages", pages},
            {"candidates", candidates},
            {"too_short", too_short},
            {"too_long", too_long},
            {"too_few_anchors", too_few_anchors},
            {"capped", capped},
            {"long_anchors_dropped", long_anchors_dropped},
            {"misaligned_anchors_dropped", misaligned_anchors_dropped},
            {"overlapping_anchors_dropped", overlapping_anchors_dropped},
            {"malformed_links", malformed_links},
            {"emitted", emitted}};
  }
};

struct FilterResult {
  std::vector<Passage> passages;
  FilterStats stats;
};

namespace detail {

struct Paragraph {
  std::size_t begin;
  std::size_t end;
};

inline std::vector<Paragraph> split_paragraphs(std::string_view text) {
  std::vector<Paragraph> out;
  std::size_t pos = 0;
  std::optional<std::size_t> open;
  std::size_t last_end = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    const bool blank = line.find_first_not_of(" \t\r") == std::string_view::npos;
    if (blank) {
      if (open) out.push_back({*open, last_end});
      open.reset();
    } else {
      if (!open) open = pos;
      last_end = nl;
    }
    pos = nl + 1;
  }
  if (open) out.push_back({*open, last_end});
  return out;
}

}  // namespace detail

/// Passages of one page in paragraph order, before any per-page cap.
inline std::vector<std::pair<int, Passage>> page_passages(const WikiPage& page,
                                                          const FilterConfig& cfg,
                                                          FilterStats& stats) {
  const AnchorExtraction ext = extract_anchors(page.wikitext);
  stats.malformed_links += ext.skipped;
  std::vector<std::pair<int, Passage>> out;
  const auto paragraphs = detail::split_paragraphs(ext.plain_text);
  for (std::size_t k = 0; k < paragraphs.size(); ++k) {
    const auto& para = paragraphs[k];
    ++stats.candidates;
    Passage p;
    p.id = page.page_id + "#" + std::to_string(k);
    p.language = page.language;
    p.text = tokenize(std::string_view(ext.plain_text).substr(para.begin, para.end - para.begin));
    const int n = static_cast<int>(p.text.size());

    std::vector<Span> anchors;
    for (const auto& a : ext.anchors) {
      if (a.begin < para.begin || a.end > para.end) continue;
      int first = -1, last = -1;
      for (int i = 0; i < n; ++i) {
        if (p.text.offsets[i].begin == a.begin - para.begin) first = i;
        if (p.text.offsets[i].end == a.end - para.begin) last = i;
      }
      if (first < 0 || last < first) {
        ++stats.misaligned_anchors_dropped;
        continue;
      }
      if (last - first + 1 > cfg.max_anchor_tokens) {
        ++stats.long_anchors_dropped;
        continue;
      }
      anchors.emplace_back(first, last + 1);
    }
    std::stable_sort(anchors.begin(), anchors.end(),
                     [](const Span& x, const Span& y) { return x.start < y.start; });
    for (const auto& a : anchors) {
      if (!p.anchors.empty() && p.anchors.back().overlaps(a)) {
        ++stats.overlapping_anchors_dropped;
        continue;
      }
      p.anchors.push_back(a);
    }

    if (n < cfg.min_tokens) {
      ++stats.too_short;
    } else if (n > cfg.max_tokens) {
      ++stats.too_long;
    } else if (static_cast<int>(p.anchors.size()) < cfg.min_anchors) {
      ++stats.too_few_anchors;
    } else {
      out.emplace_back(static_cast<int>(k), std::move(p));
    }
  }
  return out;
}

/// Output is ordered by (page_id, paragraph index), independent of input
/// order.
inline FilterResult filter_passages(const std::vector<WikiPage>& pages, const FilterConfig& cfg) {
  cfg.validate();
  FilterResult result;
  std::vector<std::tuple<std::string, int, Passage>> keyed;
  for (const auto& page : pages) {
    page.validate();
    ++result.stats.pages;
    auto found = page_passages(page, cfg, result.stats);
    if (cfg.per_page_cap && static_cast<int>(found.size()) > *cfg.per_page_cap) {
      Rng rng(cfg.seed, page.page_id);
      const auto keep = rng.sample_without_replacement(found.size(), *cfg.per_page_cap);
      result.stats.capped += static_cast<long long>(found.size() - keep.size());
      std::vector<std::pair<int, Passage>> kept;
      for (auto idx : keep) kept.push_back(std::move(found[idx]));
      found = std::move(kept);
    }
    for (auto& [k, p] : found) keyed.emplace_back(page.page_id, k, std::move(p));
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) < std::get<1>(b);
  });
  for (auto& t : keyed) result.passages.push_back(std::move(std::get<2>(t)));
  result.stats.emitted = static_cast<long long>(result.passages.size());
  return result;
}

struct CorpusStats {
  long long passage_count = 0;
  long long answer_count = 0;
  double avg_answer_tokens = 0.0;
  double avg_answers_per_passage = 0.0;
};

/// Per-language passage/answer statistics.
inline std::map<std::string, CorpusStats> corpus_stats(const std::vector<Passage>& passages) {
  std::map<std::string, long long> tokens;
  std::map<std::string, CorpusStats> out;
  for (const auto& p : passages) {
    auto& s = out[p.language];
    ++s.passage_count;
    s.answer_count += static_cast<long long>(p.anchors.size());
    for (const auto& a : p.anchors) tokens[p.language] += a.length();
  }
  for (auto& [lang, s] : out) {
    if (s.answer_count > 0) {
      s.avg_answer_tokens =
          static_cast<double>(tokens[lang]) / static_cast<double>(s.answer_count);
    }
    if (s.passage_count > 0) {
      s.avg_answers_per_passage =
          static_cast<double>(s.answer_count) / static_cast<double>(s.passage_count);
    }
  }
  return out;
}

inline nlohmann::ordered_json to_json(const std::map<std::string, CorpusStats>& stats) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [lang, s] : stats) {
    j[lang] = {{"passages", s.passage_count},
               {"answers", s.answer_count},
               {"avg_answer_tokens", s.avg_answer_tokens},
               {"avg_answers_per_passage", s.avg_answers_per_passage}};
  }
  return j;
}

// Passage JSONL: {"id", "language", "text", "anchors": [[s, e], ...]}.
// Tokens are not stored; reading re-tokenizes `text`, which is deterministic.

inline nlohmann::ordered_json to_json(const Passage& p) {
  nlohmann::ordered_json anchors = nlohmann::ordered_json::array();
  for (const auto& a : p.anchors) anchors.push_back({a.start, a.end});
  return {{"id", p.id}, {"language", p.language}, {"text", p.text.source}, {"anchors", anchors}};
}

inline std::string emit_passages_jsonl(const std::vector<Passage>& passages) {
  std::string out;
  for (const auto& p : passages) {
    out += to_json(p).dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<Passage> parse_passages_jsonl(std::string_view bytes) {
  std::vector<Passage> out;
  for_each_jsonl(bytes, [&](const nlohmann::json& j, std::size_t line) {
    const std::string where = "passage jsonl line " + std::to_string(line);
    if (!j.is_object() || !j.contains("id") || !j.contains("text") || !j.contains("anchors") ||
        !j["id"].is_string() || !j["text"].is_string() || !j["anchors"].is_array()) {
      throw FormatError(where + ": expected {id, language, text, anchors}");
    }
    Passage p;
    p.id = j["id"].get<std::string>();
    p.language = j.value("language", "");
    p.text = tokenize(j["text"].get<std::string>());
    for (const auto& a : j["anchors"]) {
      if (!a.is_array() || a.size() != 2) throw FormatError(where + ": bad anchor");
      Span s(a[0].get<int>(), a[1].get<int>());
      if (!s.valid_in(static_cast<int>(p.text.size()))) {
        throw FormatError(where + ": anchor outside passage");
      }
      p.anchors.push_back(s);
    }
    out.push_back(std::move(p));
  });
  return out;
}

inline std::vector<WikiPage> parse_wiki_jsonl(std::string_view bytes) {
  std::vector<WikiPage> out;
  for_each_jsonl(bytes, [&](const nlohmann::json& j, std::size_t line) {
    const std::string where = "wiki jsonl line " + std::to_string(line);
    for (const char* f : {"page_id", "language", "wikitext"}) {
      if (!j.is_object() || !j.contains(f) || !j[f].is_string()) {
        throw FormatError(where + ": missing string field '" + f + "'");
      }
    }
    WikiPage p{j["page_id"].get<std::string>(), j["language"].get<std::string>(),
               j["wikitext"].get<std::string>()};
    try {
      p.validate();
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    out.push_back(std::move(p));
  });
  return out;
}

}  // namespace calibre
